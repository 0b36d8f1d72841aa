#pragma once

// Thin RAII layer over the C API. Failures surface as CliError carrying the
// process exit status for the library's status code.

#include <memory>
#include <string>

#include <wdcusum/wdcusum.h>

#include "errors.hpp"

namespace wdcli {

inline int exit_code_for(wdc_status status) {
    switch (status) {
    case WDC_OK:
        return kOk;
    case WDC_ERR_CALIBRATION:
        return kCalibration;
    case WDC_ERR_CENSORING:
        return kCensoring;
    case WDC_ERR_IO:
        return kIo;
    case WDC_ERR_CONFIG:
    case WDC_ERR_PARAMETER:
    case WDC_ERR_DOMAIN:
    case WDC_ERR_NULL_ARGUMENT:
    case WDC_ERR_BUFFER_TOO_SMALL:
        return kConfig;
    case WDC_ERR_BUDGET:
    case WDC_ERR_INTERNAL:
        break;
    }
    return kInternal;
}

inline void check(wdc_status status) {
    if (status != WDC_OK) {
        throw CliError(exit_code_for(status), std::string(wdc_status_name(status)) + ": " + wdc_last_error());
    }
}

template <class T, void (*Destroy)(T *)>
struct Deleter {
    void operator()(T *p) const { Destroy(p); }
};

using PairPtr = std::unique_ptr<wdc_pair, Deleter<wdc_pair, wdc_pair_destroy>>;
using StreamPtr = std::unique_ptr<wdc_stream, Deleter<wdc_stream, wdc_stream_destroy>>;
using DetectorPtr = std::unique_ptr<wdc_detector, Deleter<wdc_detector, wdc_detector_destroy>>;
using CurvePtr = std::unique_ptr<wdc_curve, Deleter<wdc_curve, wdc_curve_destroy>>;

} // namespace wdcli
