#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "diggan/errors.hpp"
#include "diggan/trainer.hpp"

namespace diggan {

namespace {

constexpr char kMagic[8] = {'D', 'I', 'G', 'G', 'A', 'N', '0', '1'};

enum class EntryType : std::uint8_t { F32 = 1, F64 = 2, I64 = 3, Text = 4 };

class Writer {
public:
    void text(const std::string& key, const std::string& v) { entry(key, EntryType::Text, v.size(), v.data(), v.size()); }
    void i64(const std::string& key, std::int64_t v) { entry(key, EntryType::I64, 1, &v, sizeof v); }
    void i64s(const std::string& key, const std::vector<int>& v) {
        std::vector<std::int64_t> w(v.begin(), v.end());
        entry(key, EntryType::I64, w.size(), w.data(), w.size() * sizeof(std::int64_t));
    }
    void f32(const std::string& key, const std::vector<float>& v) {
        entry(key, EntryType::F32, v.size(), v.data(), v.size() * sizeof(float));
    }
    void f64(const std::string& key, const std::vector<double>& v) {
        entry(key, EntryType::F64, v.size(), v.data(), v.size() * sizeof(double));
    }

    std::string finish() {
        std::string out(kMagic, sizeof kMagic);
        raw(out, Checkpoint::kFormatVersion);
        raw(out, count_);
        out += body_;
        raw(out, fnv1a64(out));
        return out;
    }

private:
    template <class V>
    static void raw(std::string& s, V v) {
        s.append(reinterpret_cast<const char*>(&v), sizeof v);
    }
    void entry(const std::string& key, EntryType type, std::uint64_t count, const void* data, std::size_t bytes) {
        raw(body_, static_cast<std::uint32_t>(key.size()));
        body_ += key;
        raw(body_, static_cast<std::uint8_t>(type));
        raw(body_, count);
        body_.append(static_cast<const char*>(data), bytes);
        ++count_;
    }

    std::string body_;
    std::uint64_t count_ = 0;
};

struct Entry {
    EntryType type;
    std::uint64_t count;
    std::string bytes;
};

class Reader {
public:
    explicit Reader(const std::string& bytes) {
        if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
            throw CheckpointVersionError("not a checkpoint file (unrecognized magic header)");
        pos_ = sizeof kMagic;
        data_ = &bytes;
        const auto version = take<std::uint32_t>();
        if (version != Checkpoint::kFormatVersion)
            throw CheckpointVersionError("unsupported checkpoint format version " + std::to_string(version));
        if (bytes.size() < sizeof(std::uint64_t) + pos_) throw CorruptCheckpointError("checkpoint truncated");
        std::uint64_t stored = 0;
        std::memcpy(&stored, bytes.data() + bytes.size() - sizeof stored, sizeof stored);
        end_ = bytes.size() - sizeof stored;
        const auto count = take<std::uint64_t>();
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto klen = take<std::uint32_t>();
            std::string key = take_bytes(klen);
            Entry e;
            e.type = static_cast<EntryType>(take<std::uint8_t>());
            e.count = take<std::uint64_t>();
            std::size_t width = 0;
            switch (e.type) {
                case EntryType::F32: width = 4; break;
                case EntryType::F64: width = 8; break;
                case EntryType::I64: width = 8; break;
                case EntryType::Text: width = 1; break;
                default: throw CorruptCheckpointError("unknown entry type for " + key);
            }
            if (e.count > (end_ - pos_) / width) throw CorruptCheckpointError("checkpoint truncated in entry " + key);
            e.bytes = take_bytes(e.count * width);
            entries_[key] = std::move(e);
        }
        if (pos_ != end_) throw CorruptCheckpointError("trailing bytes in checkpoint");
        if (fnv1a64(std::string_view(bytes.data(), end_)) != stored)
            throw CorruptCheckpointError("checkpoint checksum mismatch");
    }

    const Entry& get(const std::string& key, EntryType type) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw CorruptCheckpointError("checkpoint lacks entry " + key);
        if (it->second.type != type) throw CorruptCheckpointError("checkpoint entry " + key + " has the wrong type");
        return it->second;
    }
    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string text(const std::string& key) const { return get(key, EntryType::Text).bytes; }
    std::int64_t i64(const std::string& key) const {
        const auto v = i64s(key);
        if (v.size() != 1) throw CorruptCheckpointError("checkpoint entry " + key + " is not a scalar");
        return v[0];
    }
    std::vector<std::int64_t> i64s(const std::string& key) const { return array<std::int64_t>(get(key, EntryType::I64)); }
    std::vector<float> f32(const std::string& key) const { return array<float>(get(key, EntryType::F32)); }
    std::vector<double> f64(const std::string& key) const { return array<double>(get(key, EntryType::F64)); }

private:
    template <class V>
    static std::vector<V> array(const Entry& e) {
        std::vector<V> out(e.count);
        if (e.count) std::memcpy(out.data(), e.bytes.data(), e.count * sizeof(V));
        return out;
    }
    template <class V>
    V take() {
        V v;
        std::memcpy(&v, take_bytes(sizeof v).data(), sizeof v);
        return v;
    }
    std::string take_bytes(std::size_t n) {
        const std::size_t limit = end_ ? end_ : data_->size();
        if (n > limit - pos_) throw CorruptCheckpointError("checkpoint truncated");
        std::string out = data_->substr(pos_, n);
        pos_ += n;
        return out;
    }

    const std::string* data_ = nullptr;
    std::size_t pos_ = 0, end_ = 0;
    std::map<std::string, Entry> entries_;
};

const char* net_key(Net n) {
    switch (n) {
        case Net::Encoder: return "E";
        case Net::Generator: return "G";
        case Net::AngleDiscriminator: return "Dangle";
        case Net::IdentityDiscriminator: return "Did";
    }
    return "?";
}

const OptimizerState& state_of(const Checkpoint& c, Net n) {
    switch (n) {
        case Net::Encoder: return c.opt_encoder;
        case Net::Generator: return c.opt_generator;
        case Net::AngleDiscriminator: return c.opt_angle;
        default: return c.opt_identity;
    }
}

OptimizerState& state_of(Checkpoint& c, Net n) { return const_cast<OptimizerState&>(state_of(std::as_const(c), n)); }

constexpr Net kNets[] = {Net::Encoder, Net::Generator, Net::AngleDiscriminator, Net::IdentityDiscriminator};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
    Writer w;
    auto& model = const_cast<ModelParams&>(c.model);
    const auto& a = c.model.arch;
    w.i64("arch.latent_dim", a.latent_dim);
    w.i64("arch.n_views", a.n_views);
    w.i64("arch.image_height", a.image_height);
    w.i64("arch.image_width", a.image_width);
    w.i64s("arch.encoder_channels", a.encoder_channels);
    w.i64s("arch.generator_channels", a.generator_channels);
    w.i64s("arch.discriminator_channels", a.discriminator_channels);
    w.text("arch.hash", architecture_hash(c.model));
    w.text("config", c.config.to_config().to_text());
    w.text("stage", c.stage);
    w.i64("global_step", c.global_step);
    for (Net n : kNets) {
        const auto params = model.parameters(n);
        for (auto* p : params) w.f32("param." + p->name, {p->value.begin(), p->value.end()});
        const auto& st = state_of(c, n);
        const std::string prefix = std::string("adam.") + net_key(n);
        w.i64(prefix + ".steps", st.steps);
        w.i64(prefix + ".initialized", st.m.empty() ? 0 : 1);
        for (std::size_t i = 0; i < st.m.size() && i < params.size(); ++i) {
            w.f64(prefix + ".m." + params[i]->name, st.m[i]);
            w.f64(prefix + ".v." + params[i]->name, st.v[i]);
        }
    }
    return w.finish();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    const Reader r(bytes);
    auto ints = [&](const std::string& key) {
        const auto v = r.i64s(key);
        return std::vector<int>(v.begin(), v.end());
    };
    ArchSpec a;
    a.latent_dim = static_cast<int>(r.i64("arch.latent_dim"));
    a.n_views = static_cast<int>(r.i64("arch.n_views"));
    a.image_height = static_cast<int>(r.i64("arch.image_height"));
    a.image_width = static_cast<int>(r.i64("arch.image_width"));
    a.encoder_channels = ints("arch.encoder_channels");
    a.generator_channels = ints("arch.generator_channels");
    a.discriminator_channels = ints("arch.discriminator_channels");
    try {
        a.validate();
    } catch (const Error& e) {
        throw CorruptCheckpointError(std::string("checkpoint architecture invalid: ") + e.what());
    }

    Checkpoint c(a);
    if (r.text("arch.hash") != architecture_hash(c.model))
        throw CorruptCheckpointError("checkpoint architecture hash does not match its layout");
    c.config = TrainConfig::from_config(Config::parse(r.text("config"), "checkpoint config"));
    c.stage = r.text("stage");
    c.global_step = r.i64("global_step");
    for (Net n : kNets) {
        const auto params = c.model.parameters(n);
        for (auto* p : params) {
            auto v = r.f32("param." + p->name);
            if (v.size() != p->size()) throw CorruptCheckpointError("parameter " + p->name + " has the wrong size");
            p->value.assign(v.begin(), v.end());
        }
        auto& st = state_of(c, n);
        const std::string prefix = std::string("adam.") + net_key(n);
        st.steps = r.i64(prefix + ".steps");
        if (r.i64(prefix + ".initialized")) {
            for (auto* p : params) {
                st.m.push_back(r.f64(prefix + ".m." + p->name));
                st.v.push_back(r.f64(prefix + ".v." + p->name));
                if (st.m.back().size() != p->size() || st.v.back().size() != p->size())
                    throw CorruptCheckpointError("optimizer state for " + p->name + " has the wrong size");
            }
        }
    }
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const auto bytes = serialize_checkpoint(ckpt);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UnwritablePathError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw UnwritablePathError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingDirectoryError("cannot open checkpoint " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return deserialize_checkpoint(ss.str());
}

Checkpoint clone_checkpoint(const Checkpoint& ckpt) {
    Checkpoint c(ckpt.model.arch);
    copy_parameters(ckpt.model, c.model);
    c.config = ckpt.config;
    c.stage = ckpt.stage;
    c.global_step = ckpt.global_step;
    c.opt_encoder = ckpt.opt_encoder;
    c.opt_generator = ckpt.opt_generator;
    c.opt_angle = ckpt.opt_angle;
    c.opt_identity = ckpt.opt_identity;
    return c;
}

}  // namespace diggan
