#pragma once

#include <stdexcept>
#include <string>

namespace zk {

// Named failure kinds; all derive from runtime_error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define ZK_ERROR(Name)                  \
    struct Name : Error {               \
        using Error::Error;             \
    }

ZK_ERROR(NoBracketError);
ZK_ERROR(ToleranceNotMetError);
ZK_ERROR(QuadratureError);
ZK_ERROR(BoxTooSmallError);
ZK_ERROR(NonDecayingError);
ZK_ERROR(GridMismatchError);
ZK_ERROR(SeparationError);
ZK_ERROR(TableRangeError);
ZK_ERROR(NonconvergenceError);
ZK_ERROR(IllPosedError);
ZK_ERROR(BlowUpError);
ZK_ERROR(TrustRegionError);
ZK_ERROR(LossOfLockError);
ZK_ERROR(HypothesisError);
ZK_ERROR(MissingRatesError);
ZK_ERROR(ConfigError);

#undef ZK_ERROR

}  // namespace zk
