#include "vadd/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace vadd::ad {

namespace {

constexpr char kMagic[4] = {'V', 'A', 'D', 'D'};

// Files are written little-endian; on a big-endian host the raw-copy path
// below would be wrong, so refuse early.
bool host_is_little_endian() {
    const uint32_t probe = 1;
    uint8_t first;
    std::memcpy(&first, &probe, 1);
    return first == 1;
}

template <typename T>
void write_pod(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is, const std::string& path) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) fail("checkpoint: truncated file ", path);
    return v;
}

void write_entry(std::ofstream& os, const std::string& name, const Shape& shape,
                 const std::vector<double>& data) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint32_t>(os, static_cast<uint32_t>(shape.size()));
    for (int e : shape) write_pod<uint64_t>(os, static_cast<uint64_t>(e));
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
}

struct Entry {
    std::string name;
    Shape shape;
    std::vector<double> data;
};

Entry read_entry(std::ifstream& is, const std::string& path) {
    Entry e;
    const uint32_t name_len = read_pod<uint32_t>(is, path);
    e.name.resize(name_len);
    is.read(e.name.data(), name_len);
    const uint32_t rank = read_pod<uint32_t>(is, path);
    int64_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        const uint64_t extent = read_pod<uint64_t>(is, path);
        if (extent == 0 || extent > (1u << 28))
            fail("checkpoint: implausible extent ", extent, " in ", path);
        e.shape.push_back(static_cast<int>(extent));
        numel *= static_cast<int64_t>(extent);
    }
    e.data.resize(static_cast<size_t>(numel));
    is.read(reinterpret_cast<char*>(e.data.data()),
            static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    if (!is) fail("checkpoint: truncated file ", path);
    return e;
}

void write_header(std::ofstream& os, const std::string& path) {
    if (!host_is_little_endian()) fail("checkpoint: big-endian hosts are unsupported");
    if (!os) fail("checkpoint: cannot open ", path, " for writing");
    os.write(kMagic, 4);
    write_pod<uint32_t>(os, kCheckpointVersion);
}

void read_header(std::ifstream& is, const std::string& path) {
    if (!host_is_little_endian()) fail("checkpoint: big-endian hosts are unsupported");
    if (!is) fail("checkpoint: cannot open ", path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        fail("checkpoint: bad magic in ", path, " (expected \"VADD\")");
    const uint32_t version = read_pod<uint32_t>(is, path);
    if (version != kCheckpointVersion)
        fail("checkpoint: unsupported format version ", version, " in ", path);
}

} // namespace

void save_params(const std::string& path, const ParamStore& params) {
    std::ofstream os(path, std::ios::binary);
    write_header(os, path);
    write_pod<uint32_t>(os, static_cast<uint32_t>(params.size()));
    for (const auto& [name, t] : params) write_entry(os, name, t.shape(), t.data());
    if (!os) fail("checkpoint: write failed for ", path);
}

void load_params(const std::string& path, ParamStore& params) {
    std::ifstream is(path, std::ios::binary);
    read_header(is, path);
    const uint32_t count = read_pod<uint32_t>(is, path);
    for (uint32_t i = 0; i < count; ++i) {
        Entry e = read_entry(is, path);
        if (params.contains(e.name)) {
            Tensor& t = params.at(e.name);
            if (t.shape() != e.shape)
                fail("checkpoint: shape mismatch for '", e.name, "': have ",
                     shape_str(t.shape()), ", file has ", shape_str(e.shape));
            t.data() = std::move(e.data);
        } else {
            params.insert(e.name, Tensor::param(std::move(e.shape), std::move(e.data)));
        }
    }
}

std::string optimizer_path(const std::string& checkpoint_path) {
    return checkpoint_path + ".opt";
}

void save_optimizer(const std::string& path, const AdamState& state) {
    std::ofstream os(path, std::ios::binary);
    write_header(os, path);
    write_pod<uint64_t>(os, state.step);
    write_pod<uint32_t>(os, static_cast<uint32_t>(state.m.size() + state.v.size()));
    for (const auto& [name, buf] : state.m)
        write_entry(os, "m." + name, {static_cast<int>(buf.size())}, buf);
    for (const auto& [name, buf] : state.v)
        write_entry(os, "v." + name, {static_cast<int>(buf.size())}, buf);
    if (!os) fail("checkpoint: write failed for ", path);
}

void load_optimizer(const std::string& path, AdamState& state) {
    std::ifstream is(path, std::ios::binary);
    read_header(is, path);
    state.step = read_pod<uint64_t>(is, path);
    state.m.clear();
    state.v.clear();
    const uint32_t count = read_pod<uint32_t>(is, path);
    for (uint32_t i = 0; i < count; ++i) {
        Entry e = read_entry(is, path);
        if (e.name.rfind("m.", 0) == 0)
            state.m[e.name.substr(2)] = std::move(e.data);
        else if (e.name.rfind("v.", 0) == 0)
            state.v[e.name.substr(2)] = std::move(e.data);
        else
            fail("checkpoint: unexpected optimizer entry '", e.name, "' in ", path);
    }
}

} // namespace vadd::ad
