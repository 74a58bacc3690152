#include "gapforge/tensor_io.hpp"

#include <cstdint>
#include <fstream>

#include "gapforge/errors.hpp"

namespace gapforge {

namespace {
constexpr char kMagic[4] = {'G', 'F', 'P', 'B'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
}  // namespace

void write_tensor_blob(const std::string& path,
                       const std::vector<std::pair<std::string, Eigen::MatrixXd>>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write parameter blob: " + path);
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, m] : tensors) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
    if (!out) throw IoFailure("write failed: " + path);
}

std::map<std::string, Eigen::MatrixXd> read_tensor_blob(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open parameter blob: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kMagic, 4))
        throw CheckpointMismatch("bad parameter blob magic: " + path);
    const auto count = read_pod<std::uint32_t>(in);
    std::map<std::string, Eigen::MatrixXd> out;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rows = read_pod<std::uint64_t>(in);
        const auto cols = read_pod<std::uint64_t>(in);
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * m.size()));
        if (!in) throw CheckpointMismatch("truncated parameter blob: " + path);
        out.emplace(std::move(name), std::move(m));
    }
    return out;
}

}  // namespace gapforge
