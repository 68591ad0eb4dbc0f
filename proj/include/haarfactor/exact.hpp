#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace haarfactor {

using BigInt = boost::multiprecision::cpp_int;

// Exact rational number, normalized with positive denominator.
class Rational {
public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}
    Rational(BigInt n) : num_(std::move(n)), den_(1) {}
    Rational(BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)) { normalize(); }

    // Doubles are dyadic rationals; the conversion is exact.
    static Rational from_double(double x);

    const BigInt& num() const { return num_; }
    const BigInt& den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    int sign() const { return num_ == 0 ? 0 : (num_ < 0 ? -1 : 1); }

    Rational operator-() const { return Rational(-num_, den_, raw_tag{}); }
    Rational operator+(const Rational& o) const {
        return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
    }
    Rational operator-(const Rational& o) const {
        return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
    }
    Rational operator*(const Rational& o) const { return Rational(num_ * o.num_, den_ * o.den_); }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw std::domain_error("Rational: division by zero");
        return Rational(num_ * o.den_, den_ * o.num_);
    }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }
    bool operator<(const Rational& o) const { return num_ * o.den_ < o.num_ * den_; }
    bool operator<=(const Rational& o) const { return num_ * o.den_ <= o.num_ * den_; }
    bool operator>(const Rational& o) const { return o < *this; }
    bool operator>=(const Rational& o) const { return o <= *this; }

    Rational pow_uint(unsigned k) const;
    Rational reciprocal() const { return Rational(den_, num_); }
    Rational abs() const { return num_ < 0 ? -*this : *this; }

    double to_double() const;
    std::string to_string() const;

private:
    struct raw_tag {};
    Rational(BigInt n, BigInt d, raw_tag) : num_(std::move(n)), den_(std::move(d)) {}
    void normalize();

    BigInt num_;
    BigInt den_;
};

// mantissa * 2^exponent with odd (or zero) mantissa. Closed under +, -, *.
class DyadicRational {
public:
    DyadicRational() : mant_(0), exp_(0) {}
    DyadicRational(long long n) : mant_(n), exp_(0) { normalize(); }
    DyadicRational(BigInt mantissa, int exponent) : mant_(std::move(mantissa)), exp_(exponent) {
        normalize();
    }

    // 2^e
    static DyadicRational pow2(int e) { return DyadicRational(BigInt(1), e); }
    static DyadicRational from_double(double x);

    const BigInt& mantissa() const { return mant_; }
    int exponent() const { return exp_; }

    bool is_zero() const { return mant_ == 0; }
    int sign() const { return mant_ == 0 ? 0 : (mant_ < 0 ? -1 : 1); }

    DyadicRational operator-() const { return DyadicRational(-mant_, exp_); }
    DyadicRational operator+(const DyadicRational& o) const;
    DyadicRational operator-(const DyadicRational& o) const { return *this + (-o); }
    DyadicRational operator*(const DyadicRational& o) const {
        return DyadicRational(mant_ * o.mant_, exp_ + o.exp_);
    }

    bool operator==(const DyadicRational& o) const { return mant_ == o.mant_ && exp_ == o.exp_; }
    bool operator!=(const DyadicRational& o) const { return !(*this == o); }
    bool operator<(const DyadicRational& o) const { return compare(o) < 0; }
    bool operator<=(const DyadicRational& o) const { return compare(o) <= 0; }
    bool operator>(const DyadicRational& o) const { return compare(o) > 0; }
    bool operator>=(const DyadicRational& o) const { return compare(o) >= 0; }

    int compare(const DyadicRational& o) const;

    Rational to_rational() const;
    double to_double() const;
    std::string to_string() const;  // "mantissa*2^exponent"

private:
    void normalize();

    BigInt mant_;
    int exp_;
};

}  // namespace haarfactor
