#include "pdg/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace pdg {

namespace {

constexpr std::array<char, 8> kMagic{'P', 'D', 'G', 'C', 'K', 'P', 'T', '\0'};

template <typename T> void put(std::ofstream &out, const T &v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

void put_string(std::ofstream &out, const std::string &s) {
    put(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_tensor_data(std::ofstream &out, const ad::Tensor &t) {
    out.write(reinterpret_cast<const char *>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
}

class Reader {
  public:
    Reader(std::ifstream &in, std::string path) : in_(in), path_(std::move(path)) {}

    template <typename T> T get() {
        T v{};
        in_.read(reinterpret_cast<char *>(&v), sizeof(T));
        check();
        return v;
    }

    std::string get_string() {
        const auto n = get<std::uint32_t>();
        if (n > (1u << 16))
            fail("implausible name length");
        std::string s(n, '\0');
        in_.read(s.data(), n);
        check();
        return s;
    }

    void get_tensor_data(ad::Tensor &t) {
        in_.read(reinterpret_cast<char *>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        check();
    }

    [[noreturn]] void fail(const std::string &what) const {
        throw CheckpointError("checkpoint '" + path_ + "': " + what);
    }

  private:
    void check() const {
        if (!in_)
            fail("truncated file");
    }
    std::ifstream &in_;
    std::string path_;
};

} // namespace

void save_checkpoint(const Checkpoint &ckpt, const std::filesystem::path &path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw CheckpointError("cannot open '" + tmp.string() + "' for writing");
        out.write(kMagic.data(), kMagic.size());
        put(out, Checkpoint::kVersion);
        put(out, ckpt.iteration);
        put(out, ckpt.seed);
        put(out, ckpt.params.step);
        put(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
        for (const auto &[name, value] : ckpt.metadata) {
            put_string(out, name);
            put(out, value);
        }
        put(out, static_cast<std::uint32_t>(ckpt.params.entries().size()));
        for (const auto &[name, e] : ckpt.params.entries()) {
            put_string(out, name);
            put(out, static_cast<std::uint32_t>(e.value.rows()));
            put(out, static_cast<std::uint32_t>(e.value.cols()));
            put_tensor_data(out, e.value);
            put_tensor_data(out, e.m);
            put_tensor_data(out, e.v);
        }
        if (!out)
            throw CheckpointError("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    Reader r(in, path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic)
        r.fail("bad magic header");
    const auto version = r.get<std::uint32_t>();
    if (version != Checkpoint::kVersion)
        r.fail("unsupported format version " + std::to_string(version));

    Checkpoint ckpt;
    ckpt.iteration = r.get<std::uint64_t>();
    ckpt.seed = r.get<std::uint64_t>();
    ckpt.params.step = r.get<std::uint64_t>();
    const auto n_meta = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_meta; ++i) {
        std::string name = r.get_string();
        ckpt.metadata[name] = r.get<double>();
    }
    const auto n_param = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_param; ++i) {
        std::string name = r.get_string();
        const auto rows = r.get<std::uint32_t>();
        const auto cols = r.get<std::uint32_t>();
        if (static_cast<std::uint64_t>(rows) * cols > (1ull << 28))
            r.fail("implausible tensor shape for '" + name + "'");
        auto &e = ckpt.params.add(name, ad::Tensor(rows, cols));
        r.get_tensor_data(e.value);
        r.get_tensor_data(e.m);
        r.get_tensor_data(e.v);
    }
    return ckpt;
}

} // namespace pdg
