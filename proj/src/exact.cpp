#include "haarfactor/exact.hpp"

#include <boost/multiprecision/integer.hpp>

#include <cstring>
#include <limits>

namespace haarfactor {

void Rational::normalize() {
    if (den_ == 0) throw std::domain_error("Rational: zero denominator");
    if (den_ < 0) {
        num_ = -num_;
        den_ = -den_;
    }
    if (num_ == 0) {
        den_ = 1;
        return;
    }
    BigInt g = boost::multiprecision::gcd(num_ < 0 ? BigInt(-num_) : num_, den_);
    if (g > 1) {
        num_ /= g;
        den_ /= g;
    }
}

Rational Rational::from_double(double x) {
    if (!std::isfinite(x)) throw std::domain_error("Rational: non-finite double");
    DyadicRational d = DyadicRational::from_double(x);
    return d.to_rational();
}

Rational Rational::pow_uint(unsigned k) const {
    Rational r(1);
    Rational base = *this;
    while (k) {
        if (k & 1u) r = r * base;
        base = base * base;
        k >>= 1u;
    }
    return r;
}

double Rational::to_double() const {
    return num_.convert_to<double>() / den_.convert_to<double>();
}

std::string Rational::to_string() const {
    std::string s = num_.str();
    if (den_ != 1) s += "/" + den_.str();
    return s;
}

void DyadicRational::normalize() {
    if (mant_ == 0) {
        exp_ = 0;
        return;
    }
    while ((mant_ & 1) == 0) {
        mant_ >>= 1;
        ++exp_;
    }
}

DyadicRational DyadicRational::from_double(double x) {
    if (!std::isfinite(x)) throw std::domain_error("DyadicRational: non-finite double");
    if (x == 0.0) return DyadicRational();
    int e = 0;
    double m = std::frexp(x, &e);  // x = m * 2^e, |m| in [0.5, 1)
    // 53 doublings make the mantissa integral.
    long long im = static_cast<long long>(std::ldexp(m, 53));
    return DyadicRational(BigInt(im), e - 53);
}

DyadicRational DyadicRational::operator+(const DyadicRational& o) const {
    if (mant_ == 0) return o;
    if (o.mant_ == 0) return *this;
    int e = std::min(exp_, o.exp_);
    BigInt a = mant_ << (exp_ - e);
    BigInt b = o.mant_ << (o.exp_ - e);
    return DyadicRational(a + b, e);
}

int DyadicRational::compare(const DyadicRational& o) const {
    DyadicRational d = *this - o;
    return d.sign();
}

Rational DyadicRational::to_rational() const {
    if (exp_ >= 0) return Rational(mant_ << exp_);
    return Rational(mant_, BigInt(1) << (-exp_));
}

double DyadicRational::to_double() const {
    // Fits comfortably for all desk-scale values; otherwise falls back to ldexp of top bits.
    double m = mant_.convert_to<double>();
    return std::ldexp(m, exp_);
}

std::string DyadicRational::to_string() const {
    return mant_.str() + "*2^" + std::to_string(exp_);
}

}  // namespace haarfactor
