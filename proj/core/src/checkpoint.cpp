#include "tracecast/checkpoint.hpp"

#include "tracecast/errors.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace tracecast {

namespace {

constexpr char kMagic[8] = {'T', 'C', 'S', 'T', 'C', 'K', 'P', 'T'};

void put_u32(std::string& out, std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

// Cursor over an in-memory copy of the file; every read is bounds-checked so
// a truncated or corrupted file fails loudly instead of reading garbage.
struct Reader {
    const std::string& buf;
    const std::string& path;
    std::size_t pos = 0;

    void require(std::size_t n) {
        if (pos + n > buf.size())
            throw DataError("truncated checkpoint file: " + path);
    }
    std::uint32_t u32() {
        require(4);
        std::uint32_t v;
        std::memcpy(&v, buf.data() + pos, 4);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        require(8);
        std::uint64_t v;
        std::memcpy(&v, buf.data() + pos, 8);
        pos += 8;
        return v;
    }
    std::string bytes(std::size_t n) {
        require(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

} // namespace

const Tensor& Checkpoint::tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return t;
    throw DataError("checkpoint has no tensor named \"" + name + "\"");
}

bool Checkpoint::has_tensor(const std::string& name) const {
    for (const auto& [n, t] : tensors)
        if (n == name) return true;
    return false;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u32(out, ckpt.format_version);
    put_u64(out, ckpt.seed);
    put_u64(out, ckpt.descriptor.size());
    out += ckpt.descriptor;
    put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, t] : ckpt.tensors) {
        put_u64(out, name.size());
        out += name;
        put_u32(out, static_cast<std::uint32_t>(t.ndim()));
        for (std::size_t d = 0; d < t.ndim(); ++d)
            put_u64(out, t.dim(d));
        const std::size_t nbytes = t.size() * sizeof(double);
        const std::size_t base = out.size();
        out.resize(base + nbytes);
        std::memcpy(out.data() + base, t.data(), nbytes);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw DataError("cannot open checkpoint file for writing: " + path);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f)
        throw DataError("write failed for checkpoint file: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw DataError("cannot open checkpoint file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    const std::string buf = ss.str();

    Reader r{buf, path};
    const std::string magic = r.bytes(sizeof(kMagic));
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0)
        throw DataError("not a checkpoint file: " + path);

    Checkpoint ckpt;
    ckpt.format_version = r.u32();
    if (ckpt.format_version != 1)
        throw DataError("unsupported checkpoint version " +
                        std::to_string(ckpt.format_version) + " in " + path);
    ckpt.seed = r.u64();
    ckpt.descriptor = r.bytes(static_cast<std::size_t>(r.u64()));

    const std::uint32_t count = r.u32();
    ckpt.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.bytes(static_cast<std::size_t>(r.u64()));
        const std::uint32_t ndim = r.u32();
        std::vector<std::size_t> shape(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d)
            shape[d] = static_cast<std::size_t>(r.u64());
        const std::size_t n = Tensor::shape_size(shape);
        r.require(n * sizeof(double));
        std::vector<double> values(n);
        std::memcpy(values.data(), buf.data() + r.pos, n * sizeof(double));
        r.pos += n * sizeof(double);
        ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    if (r.pos != buf.size())
        throw DataError("trailing bytes after checkpoint payload: " + path);
    return ckpt;
}

} // namespace tracecast
