#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "fraclab/errors.hpp"

namespace fraclab {

inline constexpr const char* kVersion = "1.0.0";

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Round-trippable decimal form.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes a file whose first line is "# fraclab <version> config_hash=<hash>".
class ArtifactWriter {
public:
    ArtifactWriter(const std::string& path, const std::string& config_hash) : os_(path, std::ios::binary) {
        if (!os_) throw Error("IOError", "cannot open " + path + " for writing");
        os_ << "# fraclab " << kVersion << " config_hash=" << config_hash << "\n";
    }

    ArtifactWriter& comment(const std::string& text) {
        os_ << "# " << text << "\n";
        return *this;
    }

    ArtifactWriter& line(const std::string& text) {
        os_ << text << "\n";
        return *this;
    }

    ArtifactWriter& row(const std::vector<double>& values) {
        std::string s;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) s += ',';
            s += fmt(values[i]);
        }
        return line(s);
    }

    ArtifactWriter& kv(const std::string& key, double value) { return line(key + "=" + fmt(value)); }
    ArtifactWriter& kv(const std::string& key, const std::string& value) { return line(key + "=" + value); }

private:
    std::ofstream os_;
};

}  // namespace fraclab
