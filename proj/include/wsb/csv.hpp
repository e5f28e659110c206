// Minimal CSV helpers shared by all data products.
#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>

namespace wsb {

// Shortest lossless representation is not required; 17 significant digits
// round-trip every double.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    CsvWriter& field(double v) { return raw(fmt_double(v)); }
    CsvWriter& field(long long v) { return raw(std::to_string(v)); }
    CsvWriter& field(int v) { return raw(std::to_string(v)); }
    CsvWriter& field(std::size_t v) { return raw(std::to_string(v)); }
    CsvWriter& field(std::string_view s) { return raw(std::string(s)); }
    CsvWriter& field(const char* s) { return raw(s); }

    void end_row() {
        os_ << '\n';
        first_ = true;
    }

private:
    CsvWriter& raw(const std::string& s) {
        if (!first_) os_ << ',';
        os_ << s;
        first_ = false;
        return *this;
    }

    std::ostream& os_;
    bool first_ = true;
};

}  // namespace wsb
