#pragma once

#include <mpfr.h>

namespace llprobe::detail {

class MpfrValue {
public:
    explicit MpfrValue(mpfr_prec_t precision) { mpfr_init2(value_, precision); }
    ~MpfrValue() { mpfr_clear(value_); }
    MpfrValue(const MpfrValue&) = delete;
    MpfrValue& operator=(const MpfrValue&) = delete;
    mpfr_ptr get() { return value_; }

private:
    mpfr_t value_;
};

}  // namespace llprobe::detail
