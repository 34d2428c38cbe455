#include "pcgen/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace pcgen {

namespace {

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream f(path, mode);
    if (!f) throw DataError("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream f(path, mode);
    if (!f) throw DataError("cannot open for reading: " + path);
    return f;
}

void put_u32_le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32_le(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw DataError("truncated file: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

bool ends_with(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace

CloudFormat cloud_format_from_name(const std::string& name) {
    if (name == "xyz") return CloudFormat::Xyz;
    if (name == "bin") return CloudFormat::Binary;
    if (name == "ply") return CloudFormat::Ply;
    throw ConfigError("unknown cloud format: " + name + " (expected xyz, bin, or ply)");
}

void write_cloud_xyz(const std::string& path, const PointCloud& cloud) {
    auto f = open_out(path);
    char line[96];
    for (const auto& p : cloud.points) {
        std::snprintf(line, sizeof line, "%.9g %.9g %.9g\n", p.x, p.y, p.z);
        f << line;
    }
    if (!f) throw DataError("write failed: " + path);
}

PointCloud read_cloud_xyz(const std::string& path) {
    auto f = open_in(path);
    PointCloud cloud;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        Vec3 p;
        if (!(ls >> p.x >> p.y >> p.z)) throw DataError("bad xyz line in " + path);
        cloud.points.push_back(p);
    }
    if (cloud.empty()) throw DataError("empty cloud file: " + path);
    return cloud;
}

void write_cloud_binary(const std::string& path, const PointCloud& cloud) {
    auto f = open_out(path, std::ios::binary);
    f.write("PCF1", 4);
    put_u32_le(f, static_cast<std::uint32_t>(cloud.size()));
    std::vector<float> buf;
    buf.reserve(cloud.points.size() * 3);
    for (const auto& p : cloud.points) {
        buf.push_back(static_cast<float>(p.x));
        buf.push_back(static_cast<float>(p.y));
        buf.push_back(static_cast<float>(p.z));
    }
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw DataError("write failed: " + path);
}

PointCloud read_cloud_binary(const std::string& path) {
    auto f = open_in(path, std::ios::binary);
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "PCF1", 4) != 0)
        throw DataError("bad cloud magic in " + path);
    const std::uint32_t n = get_u32_le(f, path);
    std::vector<float> buf(static_cast<size_t>(n) * 3);
    if (!f.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float))))
        throw DataError("truncated cloud file: " + path);
    PointCloud cloud;
    cloud.points.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
        cloud.points.push_back({buf[i * 3], buf[i * 3 + 1], buf[i * 3 + 2]});
    return cloud;
}

void write_cloud_ply(const std::string& path, const PointCloud& cloud) {
    auto f = open_out(path);
    f << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    char line[96];
    for (const auto& p : cloud.points) {
        std::snprintf(line, sizeof line, "%.9g %.9g %.9g\n", p.x, p.y, p.z);
        f << line;
    }
    if (!f) throw DataError("write failed: " + path);
}

void write_cloud(const std::string& path, const PointCloud& cloud, CloudFormat fmt) {
    switch (fmt) {
        case CloudFormat::Xyz: write_cloud_xyz(path, cloud); return;
        case CloudFormat::Binary: write_cloud_binary(path, cloud); return;
        case CloudFormat::Ply: write_cloud_ply(path, cloud); return;
    }
}

PointCloud read_cloud(const std::string& path) {
    if (ends_with(path, ".xyz")) return read_cloud_xyz(path);
    if (ends_with(path, ".pcb") || ends_with(path, ".bin")) return read_cloud_binary(path);
    // Fall back on the magic bytes.
    {
        auto f = open_in(path, std::ios::binary);
        char magic[4] = {0, 0, 0, 0};
        f.read(magic, 4);
        if (std::memcmp(magic, "PCF1", 4) == 0) return read_cloud_binary(path);
    }
    return read_cloud_xyz(path);
}

void write_image(const std::string& path, const ImageTensor& img) {
    if (img.channels != 1 && img.channels != 3)
        throw DataError("image must have 1 or 3 channels: " + path);
    auto f = open_out(path, std::ios::binary);
    f << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> buf;
    buf.reserve(img.values.size());
    for (double v : img.values) {
        const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        buf.push_back(static_cast<unsigned char>(std::lround(c * 255.0)));
    }
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw DataError("write failed: " + path);
}

ImageTensor read_image(const std::string& path) {
    auto f = open_in(path, std::ios::binary);
    std::string magic;
    f >> magic;
    if (magic != "P5" && magic != "P6") throw DataError("unsupported image format in " + path);
    int w = 0, h = 0, maxval = 0;
    f >> w >> h >> maxval;
    if (w < 1 || h < 1 || maxval != 255) throw DataError("bad image header in " + path);
    f.get();  // single whitespace after maxval
    const int ch = magic == "P5" ? 1 : 3;
    ImageTensor img(h, w, ch);
    std::vector<unsigned char> buf(static_cast<size_t>(w) * h * ch);
    if (!f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
        throw DataError("truncated image file: " + path);
    for (size_t i = 0; i < buf.size(); ++i) img.values[i] = buf[i] / 255.0;
    return img;
}

std::string read_text_file(const std::string& path) {
    auto f = open_in(path, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    auto f = open_out(path, std::ios::binary);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw DataError("write failed: " + path);
}

}  // namespace pcgen
