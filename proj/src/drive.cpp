#include "lanesig/drive.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lanesig {

namespace {

std::string shortest(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("float formatting failed");
    return std::string(buf, p);
}

double parse_double(const std::string& text, std::size_t line_no) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last)
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": not a number: '" + text + "'");
    return v;
}

void write_raw(std::ofstream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_raw(std::ifstream& in, void* data, std::size_t n, const char* what) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
        throw std::invalid_argument(std::string("truncated drive file while reading ") + what);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

int Drive::lane_at(std::uint64_t t) const {
    // Last segment whose start is <= t.
    auto it = std::upper_bound(segments.begin(), segments.end(), t,
                               [](std::uint64_t v, const LaneSegment& s) { return v < s.start; });
    if (it == segments.begin()) throw std::invalid_argument("lane_at before first segment");
    return std::prev(it)->lane;
}

void Drive::validate() const {
    if (samples.empty()) throw std::invalid_argument("drive has no samples");
    if (!(fs_hz > 0)) throw std::invalid_argument("sample rate must be positive");
    if (segments.empty()) throw std::invalid_argument("drive has no lane segments");
    if (segments.front().start != 0)
        throw std::invalid_argument("first lane segment must start at sample 0");
    for (std::size_t i = 1; i < segments.size(); ++i)
        if (segments[i].start <= segments[i - 1].start)
            throw std::invalid_argument("lane segment starts must be strictly increasing");
    if (segments.back().start >= samples.size())
        throw std::invalid_argument("lane segment starts past the end of the drive");
}

void write_drive_csv(const Drive& d, const std::filesystem::path& path) {
    d.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << "# lanesig-drive v1, fs_hz=" << shortest(d.fs_hz) << ", lane=";
    if (d.single_lane())
        out << d.segments.front().lane;
    else
        out << "stitched";
    out << ", seed=" << d.seed << "\n";
    if (!d.single_lane()) {
        out << "# switches=";
        for (std::size_t i = 0; i < d.segments.size(); ++i) {
            if (i) out << ",";
            out << d.segments[i].start << ":" << d.segments[i].lane;
        }
        out << "\n";
    }
    for (double v : d.samples) out << shortest(v) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Drive read_drive_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open: " + path.string());
    Drive d;
    d.segments.clear();
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw std::invalid_argument("empty drive file");
    ++line_no;
    const std::string magic = "# lanesig-drive v1,";
    if (line.rfind(magic, 0) != 0)
        throw std::invalid_argument("line 1: missing 'lanesig-drive v1' header");
    std::string rest = line.substr(magic.size());
    std::string lane_field;
    {
        std::stringstream ss(rest);
        std::string field;
        while (std::getline(ss, field, ',')) {
            field = trim(field);
            const auto eq = field.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("line 1: malformed header field '" + field + "'");
            const std::string key = field.substr(0, eq);
            const std::string val = field.substr(eq + 1);
            if (key == "fs_hz")
                d.fs_hz = parse_double(val, 1);
            else if (key == "lane")
                lane_field = val;
            else if (key == "seed")
                d.seed = std::stoull(val);
            else
                throw std::invalid_argument("line 1: unknown header field '" + key + "'");
        }
    }
    if (lane_field.empty()) throw std::invalid_argument("line 1: missing lane field");

    std::vector<double> samples;
    bool saw_switches = false;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string sw = "# switches=";
            std::string raw = line;
            if (raw.rfind(sw, 0) == 0) {
                saw_switches = true;
                std::stringstream ss(raw.substr(sw.size()));
                std::string pair;
                while (std::getline(ss, pair, ',')) {
                    const auto colon = pair.find(':');
                    if (colon == std::string::npos)
                        throw std::invalid_argument("line " + std::to_string(line_no) +
                                                    ": malformed switch entry '" + pair + "'");
                    LaneSegment seg;
                    seg.start = std::stoull(pair.substr(0, colon));
                    seg.lane = std::stoi(pair.substr(colon + 1));
                    d.segments.push_back(seg);
                }
            }
            continue;
        }
        samples.push_back(parse_double(line, line_no));
    }
    d.samples = std::move(samples);
    if (lane_field == "stitched") {
        if (!saw_switches)
            throw std::invalid_argument("stitched drive is missing its switches line");
    } else {
        if (!saw_switches) d.segments = {{0, std::stoi(lane_field)}};
        d.provenance = "original";
    }
    if (!d.single_lane()) d.provenance = "stitched";
    d.validate();
    return d;
}

void write_drive_bin(const Drive& d, const std::filesystem::path& path) {
    d.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    write_raw(out, "LSDRV1", 6);
    const std::uint64_t count = d.samples.size();
    write_raw(out, &count, sizeof count);
    write_raw(out, &d.fs_hz, sizeof d.fs_hz);
    const std::uint32_t nseg = static_cast<std::uint32_t>(d.segments.size());
    write_raw(out, &nseg, sizeof nseg);
    for (const auto& seg : d.segments) {
        write_raw(out, &seg.start, sizeof seg.start);
        const std::int32_t lane = seg.lane;
        write_raw(out, &lane, sizeof lane);
    }
    for (double v : d.samples) {
        const float f = static_cast<float>(v);
        write_raw(out, &f, sizeof f);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

Drive read_drive_bin(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open: " + path.string());
    char magic[6];
    read_raw(in, magic, 6, "magic");
    if (std::memcmp(magic, "LSDRV1", 6) != 0)
        throw std::invalid_argument("not a LSDRV1 drive file: " + path.string());
    Drive d;
    d.segments.clear();
    std::uint64_t count = 0;
    read_raw(in, &count, sizeof count, "sample count");
    read_raw(in, &d.fs_hz, sizeof d.fs_hz, "sample rate");
    std::uint32_t nseg = 0;
    read_raw(in, &nseg, sizeof nseg, "segment count");
    for (std::uint32_t i = 0; i < nseg; ++i) {
        LaneSegment seg;
        std::int32_t lane = 0;
        read_raw(in, &seg.start, sizeof seg.start, "segment start");
        read_raw(in, &lane, sizeof lane, "segment lane");
        seg.lane = lane;
        d.segments.push_back(seg);
    }
    d.samples.resize(count);
    for (auto& v : d.samples) {
        float f = 0;
        read_raw(in, &f, sizeof f, "samples");
        v = f;
    }
    if (!d.single_lane()) d.provenance = "stitched";
    d.validate();
    return d;
}

void write_drive(const Drive& d, const std::filesystem::path& path) {
    if (path.extension() == ".csv")
        write_drive_csv(d, path);
    else
        write_drive_bin(d, path);
}

Drive read_drive(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return read_drive_csv(path);
    return read_drive_bin(path);
}

}  // namespace lanesig
