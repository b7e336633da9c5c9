#include "latentcd/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <system_error>

#include "latentcd/errors.hpp"
#include "latentcd/hash.hpp"

namespace latentcd {

namespace {

constexpr std::uint32_t kDtypeF64 = 1;

// Byte-level little-endian serialization, so files are identical across
// hosts regardless of native endianness.
struct Writer {
    std::string buf;

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
    }
    void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
    void bytes(const void* p, std::size_t n) {
        buf.append(static_cast<const char*>(p), n);
    }
};

struct Reader {
    const unsigned char* p;
    std::size_t n;
    std::size_t pos = 0;
    std::string context;

    void need(std::size_t k) const {
        if (pos + k > n) throw IoError(context + ": truncated file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t k) {
        need(k);
        std::string s(reinterpret_cast<const char*>(p + pos), k);
        pos += k;
        return s;
    }
};

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
        f.write(content.data(), std::streamsize(content.size()));
        f.flush();
        if (!f) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "' into place: " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    std::string content((std::istreambuf_iterator<char>(f)),
                        std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError("read failed for '" + path.string() + "'");
    return content;
}

std::string serialize_tensors(const TensorList& tensors) {
    Writer w;
    w.u32(kTensorMagic);
    w.u32(kContainerVersion);
    w.u32(std::uint32_t(tensors.size()));
    for (const auto& t : tensors) {
        w.u32(std::uint32_t(t.name.size()));
        w.bytes(t.name.data(), t.name.size());
        w.u32(std::uint32_t(t.shape.size()));
        std::size_t count = 1;
        for (auto d : t.shape) {
            w.u64(std::uint64_t(d));
            count *= d;
        }
        if (count != t.data.size()) {
            throw IoError("tensor '" + t.name + "': shape does not match payload");
        }
        w.u32(kDtypeF64);
        for (double v : t.data) w.f64(v);
    }
    const std::uint64_t hash = fnv1a64(w.buf.data(), w.buf.size());
    w.u64(hash);
    return std::move(w.buf);
}

TensorList parse_tensors(const std::string& content, const std::string& context) {
    if (content.size() < 20) throw IoError(context + ": truncated file");
    const std::size_t body = content.size() - 8;
    Reader r{reinterpret_cast<const unsigned char*>(content.data()), body, 0, context};
    Reader trailer{reinterpret_cast<const unsigned char*>(content.data()) + body, 8, 0,
                   context};
    const std::uint64_t stored = trailer.u64();
    const std::uint64_t computed = fnv1a64(content.data(), body);
    if (stored != computed) throw IoError(context + ": content hash mismatch");

    if (r.u32() != kTensorMagic) throw IoError(context + ": bad magic");
    const std::uint32_t version = r.u32();
    if (version != kContainerVersion) {
        throw IoError(context + ": unsupported version " + std::to_string(version));
    }
    const std::uint32_t count = r.u32();
    TensorList out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Tensor t;
        const std::uint32_t name_len = r.u32();
        t.name = r.str(name_len);
        const std::uint32_t rank = r.u32();
        std::size_t total = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint64_t dim = r.u64();
            t.shape.push_back(std::size_t(dim));
            total *= std::size_t(dim);
        }
        if (r.u32() != kDtypeF64) throw IoError(context + ": unsupported dtype");
        r.need(total * 8);
        t.data.resize(total);
        for (std::size_t j = 0; j < total; ++j) t.data[j] = r.f64();
        out.push_back(std::move(t));
    }
    if (r.pos != body) throw IoError(context + ": trailing bytes");
    return out;
}

}  // namespace

void save_tensors(const std::filesystem::path& path, const TensorList& tensors) {
    write_file_atomic(path, serialize_tensors(tensors));
}

TensorList load_tensors(const std::filesystem::path& path) {
    return parse_tensors(read_file(path), path.string());
}

std::uint64_t checkpoint_content_hash(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    if (content.size() < 8) throw IoError(path.string() + ": truncated file");
    const std::size_t body = content.size() - 8;
    Reader trailer{reinterpret_cast<const unsigned char*>(content.data()) + body, 8, 0,
                   path.string()};
    const std::uint64_t stored = trailer.u64();
    if (stored != fnv1a64(content.data(), body)) {
        throw IoError(path.string() + ": content hash mismatch");
    }
    return stored;
}

void save_model(const std::filesystem::path& path, const DenoiserModel& m) {
    const auto& cfg = m.config();
    Tensor meta = Tensor::zeros("meta.config", {9});
    meta.data = {double(cfg.latent_dim), double(cfg.content_dim), double(cfg.speaker_dim),
                 double(cfg.f0_embed_dim), double(cfg.t_sin_dim), double(cfg.t_feat_dim),
                 double(cfg.width), double(cfg.depth), double(cfg.schedule_steps)};
    TensorList all;
    all.push_back(std::move(meta));
    for (const auto& t : m.params()) all.push_back(t);
    save_tensors(path, all);
}

DenoiserModel load_model(const std::filesystem::path& path) {
    TensorList all = load_tensors(path);
    if (all.empty() || all[0].name != "meta.config" || all[0].data.size() != 9) {
        throw IoError(path.string() + ": not a model checkpoint");
    }
    const auto& md = all[0].data;
    DenoiserConfig cfg;
    cfg.latent_dim = int(md[0]);
    cfg.content_dim = int(md[1]);
    cfg.speaker_dim = int(md[2]);
    cfg.f0_embed_dim = int(md[3]);
    cfg.t_sin_dim = int(md[4]);
    cfg.t_feat_dim = int(md[5]);
    cfg.width = int(md[6]);
    cfg.depth = int(md[7]);
    cfg.schedule_steps = int(md[8]);

    DenoiserModel m = DenoiserModel::init(cfg, 0);
    auto& params = m.params();
    if (all.size() != params.size() + 1) {
        throw IoError(path.string() + ": wrong tensor count for this architecture");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor& stored = all[i + 1];
        if (stored.name != params[i].name || stored.shape != params[i].shape) {
            throw IoError(path.string() + ": tensor '" + stored.name +
                          "' does not match the architecture");
        }
        params[i].data = stored.data;
    }
    return m;
}

void save_latents(const std::filesystem::path& path, const std::vector<Vec>& rows,
                  int dim) {
    Writer w;
    w.u32(kLatentsMagic);
    w.u32(kContainerVersion);
    w.u64(std::uint64_t(rows.size()));
    w.u64(std::uint64_t(dim));
    w.u32(kDtypeF64);
    for (const auto& row : rows) {
        if (int(row.size()) != dim) throw IoError("save_latents: ragged row");
        for (double v : row) w.f64(v);
    }
    w.u64(fnv1a64(w.buf.data(), w.buf.size()));
    write_file_atomic(path, w.buf);
}

std::pair<std::vector<Vec>, int> load_latents(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    if (content.size() < 32) throw IoError(path.string() + ": truncated file");
    const std::size_t body = content.size() - 8;
    Reader r{reinterpret_cast<const unsigned char*>(content.data()), body, 0,
             path.string()};
    Reader trailer{reinterpret_cast<const unsigned char*>(content.data()) + body, 8, 0,
                   path.string()};
    if (trailer.u64() != fnv1a64(content.data(), body)) {
        throw IoError(path.string() + ": content hash mismatch");
    }
    if (r.u32() != kLatentsMagic) throw IoError(path.string() + ": bad magic");
    if (r.u32() != kContainerVersion) throw IoError(path.string() + ": unsupported version");
    const std::uint64_t n = r.u64();
    const std::uint64_t dim = r.u64();
    if (r.u32() != kDtypeF64) throw IoError(path.string() + ": unsupported dtype");
    std::vector<Vec> rows;
    rows.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Vec row(dim);
        for (std::uint64_t j = 0; j < dim; ++j) row[j] = r.f64();
        rows.push_back(std::move(row));
    }
    if (r.pos != body) throw IoError(path.string() + ": trailing bytes");
    return {std::move(rows), int(dim)};
}

std::uint64_t file_fnv1a(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    return fnv1a64(content.data(), content.size());
}

}  // namespace latentcd
