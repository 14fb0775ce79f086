#include "csifb/harness/dataset.hpp"

#include <cstring>
#include <fstream>

namespace csifb {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'F', 'D'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindDetection = 1;
constexpr std::uint32_t kKindReconstruction = 2;

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void append(std::vector<std::uint8_t>& buf, const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
}

void append_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    append(buf, &v, sizeof v);
}

void append_mat(std::vector<std::uint8_t>& buf, const Mat& m) {
    append_u32(buf, static_cast<std::uint32_t>(m.rows()));
    append_u32(buf, static_cast<std::uint32_t>(m.cols()));
    append(buf, m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
}

void write_file(const std::string& path, std::vector<std::uint8_t>& buf) {
    const std::uint64_t sum = fnv1a64(buf.data(), buf.size());
    append(buf, &sum, sizeof sum);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open dataset for writing: " + path);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (!f) throw DataError("failed writing dataset: " + path);
}

struct Cursor {
    const std::uint8_t* p;
    std::size_t left;

    void raw(void* out, std::size_t n) {
        if (n > left) throw DataError("dataset payload shorter than header claims");
        std::memcpy(out, p, n);
        p += n;
        left -= n;
    }
    std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
    Mat mat() {
        const std::uint32_t rows = u32();
        const std::uint32_t cols = u32();
        if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 28))
            throw DataError("dataset matrix header is implausible");
        Mat m(rows, cols);
        raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
        return m;
    }
};

std::vector<std::uint8_t> read_checked(const std::string& path,
                                       std::uint32_t expect_kind,
                                       Cursor& cursor_out) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw DataError("cannot open dataset: " + path);
    const std::streamsize n = f.tellg();
    f.seekg(0);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(n));
    f.read(reinterpret_cast<char*>(buf.data()), n);
    if (!f) throw DataError("failed reading dataset: " + path);
    if (buf.size() < 20) throw DataError("dataset file truncated: " + path);
    if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
        throw DataError("not a dataset file (bad magic): " + path);
    std::uint32_t version, kind;
    std::memcpy(&version, buf.data() + 4, sizeof version);
    std::memcpy(&kind, buf.data() + 8, sizeof kind);
    if (version != kVersion)
        throw DataError("unsupported dataset version in " + path);
    if (kind != expect_kind)
        throw DataError("dataset kind mismatch in " + path);
    std::uint64_t stored;
    std::memcpy(&stored, buf.data() + buf.size() - 8, sizeof stored);
    if (fnv1a64(buf.data(), buf.size() - 8) != stored)
        throw DataError("dataset checksum mismatch (corrupt or truncated): " + path);
    cursor_out = Cursor{buf.data() + 12, buf.size() - 20};
    return buf;
}

} // namespace

void save_dataset(const DetectionDataset& ds, const std::string& path) {
    std::vector<std::uint8_t> buf;
    append(buf, kMagic, sizeof kMagic);
    append_u32(buf, kVersion);
    append_u32(buf, kKindDetection);
    append_mat(buf, ds.x);
    append_mat(buf, ds.d);
    append_mat(buf, ds.w);
    write_file(path, buf);
}

void save_dataset(const ReconstructionDataset& ds, const std::string& path) {
    std::vector<std::uint8_t> buf;
    append(buf, kMagic, sizeof kMagic);
    append_u32(buf, kVersion);
    append_u32(buf, kKindReconstruction);
    append_mat(buf, ds.x);
    append_mat(buf, ds.h);
    write_file(path, buf);
}

DetectionDataset load_detection_dataset(const std::string& path) {
    Cursor c{nullptr, 0};
    const auto buf = read_checked(path, kKindDetection, c);
    DetectionDataset ds;
    ds.x = c.mat();
    ds.d = c.mat();
    ds.w = c.mat();
    if (c.left != 0) throw DataError("dataset has trailing bytes: " + path);
    if (ds.x.cols() != ds.d.cols() || ds.x.cols() != ds.w.cols() ||
        ds.x.rows() != ds.d.rows())
        throw DataError("dataset matrices are inconsistent: " + path);
    return ds;
}

ReconstructionDataset load_reconstruction_dataset(const std::string& path) {
    Cursor c{nullptr, 0};
    const auto buf = read_checked(path, kKindReconstruction, c);
    ReconstructionDataset ds;
    ds.x = c.mat();
    ds.h = c.mat();
    if (c.left != 0) throw DataError("dataset has trailing bytes: " + path);
    if (ds.x.cols() != ds.h.cols() || ds.x.rows() != ds.h.rows())
        throw DataError("dataset matrices are inconsistent: " + path);
    return ds;
}

} // namespace csifb
