#include "sail/checkpoint.hpp"

#include "sail/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sail {

namespace {

class Writer {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    std::vector<std::uint8_t> out;

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
};

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& b, std::size_t end) : buf(b), limit(end) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::string string(std::uint64_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }
    void need(std::uint64_t n) const {
        require(n <= limit - pos, ErrorKind::format, "checkpoint truncated at byte " + std::to_string(pos));
    }
    std::size_t pos = 0;

private:
    std::uint64_t get(int n) {
        need(static_cast<std::uint64_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
        pos += n;
        return v;
    }
    const std::vector<std::uint8_t>& buf;
    std::size_t limit;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params, const SailConfig& cfg) {
    Writer w;
    w.bytes(checkpoint_magic, sizeof checkpoint_magic);
    w.u32(checkpoint_version);
    const std::string config = to_json(cfg).dump();
    w.u64(config.size());
    w.bytes(config.data(), config.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& name = params.name(i);
        const Tensor& t = params.value(i);
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.u32(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.dims()) w.u64(d);
        for (double v : t.data()) w.f64(v);
    }
    w.u32(static_cast<std::uint32_t>(params.size()));
    return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    require(bytes.size() >= sizeof checkpoint_magic + 4 + 8 + 4, ErrorKind::format, "checkpoint truncated: " + std::to_string(bytes.size()) + " bytes");
    require(std::memcmp(bytes.data(), checkpoint_magic, sizeof checkpoint_magic) == 0, ErrorKind::format, "not a SAIL checkpoint (bad magic)");
    const std::size_t footer = bytes.size() - 4;
    Reader r(bytes, footer);
    r.pos = sizeof checkpoint_magic;
    Checkpoint ck;
    ck.version = r.u32();
    require(ck.version == checkpoint_version, ErrorKind::format,
            "unsupported checkpoint version " + std::to_string(ck.version) + " (expected " + std::to_string(checkpoint_version) + ")");
    const std::uint64_t config_len = r.u64();
    const std::string config = r.string(config_len);
    try {
        ck.config = sail_config_from_json(nlohmann::json::parse(config));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("checkpoint config: ") + e.what());
    } catch (const Error& e) {
        fail(ErrorKind::format, std::string("checkpoint config: ") + e.what());
    }

    Reader tail(bytes, bytes.size());
    tail.pos = footer;
    const std::uint32_t count = tail.u32();
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::string name = r.string(r.u32());
        const std::uint32_t rank = r.u32();
        require(rank >= 1 && rank <= 8, ErrorKind::format, "checkpoint tensor " + name + " has rank " + std::to_string(rank));
        std::vector<std::size_t> dims(rank);
        std::uint64_t size = 1;
        for (auto& d : dims) {
            d = r.u64();
            require(d >= 1 && size <= (footer / 8) / d, ErrorKind::format, "checkpoint tensor " + name + " has invalid dims");
            size *= d;
        }
        r.need(size * 8);
        std::vector<double> data(size);
        for (auto& v : data) v = r.f64();
        require(!ck.params.contains(name), ErrorKind::format, "checkpoint repeats tensor " + name);
        ck.params.add(name, Tensor(std::move(dims), std::move(data)));
    }
    require(r.pos == footer, ErrorKind::format,
            "checkpoint has " + std::to_string(footer - r.pos) + " unexpected bytes before the footer (truncated or corrupt)");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const SailConfig& cfg) {
    const auto bytes = encode_checkpoint(params, cfg);
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(out.good(), ErrorKind::io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

SailModel load_model(const std::filesystem::path& path) {
    Checkpoint ck = load_checkpoint(path);
    return SailModel(ck.config, std::move(ck.params));
}

}  // namespace sail
