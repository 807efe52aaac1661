#include "l5d.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "common.hpp"

namespace cg {
namespace {

void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
    const unsigned char* p;
    const unsigned char* end;
    std::string path;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n) fail_format("l5d truncated: " + path);
    }
    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
};

}  // namespace

void write_l5d(const LiftedFeatureMap& map, const std::string& path) {
    std::string buf;
    buf.reserve(20 + map.points.size() * 22);
    buf += "L5D1";
    put_u32(buf, static_cast<std::uint32_t>(map.width));
    put_u32(buf, static_cast<std::uint32_t>(map.height));
    put_u32(buf, static_cast<std::uint32_t>(map.n_theta));
    put_u32(buf, static_cast<std::uint32_t>(map.points.size()));
    for (const LiftedPoint& p : map.points) {
        put_u16(buf, p.x);
        put_u16(buf, p.y);
        put_u16(buf, p.theta_bin);
        put_f64(buf, p.f);
        put_f64(buf, p.kappa);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write l5d file: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) fail_io("short write to " + path);
}

LiftedFeatureMap read_l5d(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail_io("cannot open l5d file: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() < 20 || data.compare(0, 4, "L5D1") != 0)
        fail_format("not an l5d file: " + path);

    Reader r{reinterpret_cast<const unsigned char*>(data.data()) + 4,
             reinterpret_cast<const unsigned char*>(data.data()) + data.size(), path};
    LiftedFeatureMap map;
    map.width = static_cast<int>(r.u32());
    map.height = static_cast<int>(r.u32());
    map.n_theta = static_cast<int>(r.u32());
    const std::uint32_t count = r.u32();
    if (map.width < 1 || map.height < 1 || map.n_theta < 2)
        fail_format("l5d header out of range: " + path);
    map.points.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        LiftedPoint p;
        p.x = r.u16();
        p.y = r.u16();
        p.theta_bin = r.u16();
        p.f = r.f64();
        p.kappa = r.f64();
        if (p.x >= map.width || p.y >= map.height || p.theta_bin >= map.n_theta)
            fail_format("l5d point out of range: " + path);
        map.points.push_back(p);
    }
    return map;
}

void write_l5d_json(const LiftedFeatureMap& map, const std::string& path) {
    nlohmann::json j;
    j["width"] = map.width;
    j["height"] = map.height;
    j["n_theta"] = map.n_theta;
    nlohmann::json pts = nlohmann::json::array();
    for (const LiftedPoint& p : map.points)
        pts.push_back({p.x, p.y, p.theta_bin, p.f, p.kappa});
    j["points"] = std::move(pts);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail_io("cannot write l5d json mirror: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace cg
