#pragma once

// CSV output: header row, '.' decimal, 17 significant digits.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace homodyne::csv {

inline std::string format(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, end);
}

inline std::string format(std::uint64_t v) { return std::to_string(v); }

/// Shortest representation that round-trips, for file names.
inline std::string format_short(double v)
{
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

class Writer
{
  public:
    Writer(std::ostream& os, const std::vector<std::string_view>& header) : os_(os)
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            os_ << (i ? "," : "") << header[i];
        os_ << '\n';
    }

    template <class... Ts>
    void row(const Ts&... fields)
    {
        bool first = true;
        ((os_ << (first ? "" : ",") << cell(fields), first = false), ...);
        os_ << '\n';
    }

  private:
    static std::string cell(double v) { return format(v); }
    static std::string cell(std::uint64_t v) { return format(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    std::ostream& os_;
};

} // namespace homodyne::csv
