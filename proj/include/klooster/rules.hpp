#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "klooster/error.hpp"

namespace klooster {

/// Parameter rules for sweeps:
///   "p", "p-1", "p^x", "N", "N^x", "fixed:v", "log_power:k"  ((log N)^k)
class Rule {
public:
    enum class Kind { P, PMinusOne, PPower, N, NPower, Fixed, LogPower };

    Rule() = default;

    static Rule parse(std::string_view text) {
        Rule r;
        r.text_ = std::string(text);
        auto number = [&](std::string_view s) {
            try {
                std::size_t used = 0;
                const double v = std::stod(std::string(s), &used);
                if (used != s.size()) throw std::invalid_argument("trailing");
                return v;
            } catch (const std::exception&) {
                throw Error(ErrorKind::ConfigError, "bad number in rule '" + std::string(text) + "'");
            }
        };
        if (text == "p") {
            r.kind_ = Kind::P;
        } else if (text == "p-1") {
            r.kind_ = Kind::PMinusOne;
        } else if (text == "N") {
            r.kind_ = Kind::N;
        } else if (text.starts_with("p^")) {
            r.kind_ = Kind::PPower;
            r.value_ = number(text.substr(2));
        } else if (text.starts_with("N^")) {
            r.kind_ = Kind::NPower;
            r.value_ = number(text.substr(2));
        } else if (text.starts_with("fixed:")) {
            r.kind_ = Kind::Fixed;
            r.value_ = number(text.substr(6));
        } else if (text.starts_with("log_power:")) {
            r.kind_ = Kind::LogPower;
            r.value_ = number(text.substr(10));
        } else {
            throw Error(ErrorKind::ConfigError, "unknown rule '" + std::string(text) + "'");
        }
        return r;
    }

    bool uses_N() const noexcept { return kind_ == Kind::N || kind_ == Kind::NPower || kind_ == Kind::LogPower; }
    const std::string& text() const noexcept { return text_; }

    double evaluate(double p, double N = std::nan("")) const {
        if (uses_N() && std::isnan(N)) throw Error(ErrorKind::ConfigError, "rule '" + text_ + "' needs N");
        switch (kind_) {
            case Kind::P: return p;
            case Kind::PMinusOne: return p - 1;
            case Kind::PPower: return std::pow(p, value_);
            case Kind::N: return N;
            case Kind::NPower: return std::pow(N, value_);
            case Kind::Fixed: return value_;
            case Kind::LogPower: return std::pow(std::log(N), value_);
        }
        return 0.0;
    }

    /// floor of the value, nudged so that exact integers survive rounding.
    std::uint64_t evaluate_integer(double p, double N = std::nan("")) const {
        const double v = evaluate(p, N);
        if (!(v >= 0.0)) throw Error(ErrorKind::ConfigError, "rule '" + text_ + "' gave a negative value");
        return static_cast<std::uint64_t>(std::floor(v * (1.0 + 1e-12)));
    }

private:
    Kind kind_ = Kind::P;
    double value_ = 0.0;
    std::string text_ = "p";
};

}  // namespace klooster
