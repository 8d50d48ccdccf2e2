#include "rmgan/pipeline/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "rmgan/common/error.hpp"

namespace fs = std::filesystem;

namespace rmgan::pipeline {

namespace {

constexpr char kMagic[4] = {'A', 'M', 'K', '1'};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }
    void record(const std::string& name, const ad::Shape& shape, std::span<const double> data) {
        str(name);
        u32(static_cast<std::uint32_t>(shape.size()));
        for (std::size_t d : shape) u64(d);
        for (double v : data) f64(v);
        ++records_;
    }
    std::vector<unsigned char>& buffer() { return buf_; }
    std::uint32_t records() const { return records_; }

private:
    std::vector<unsigned char> buf_;
    std::uint32_t records_ = 0;
};

class Reader {
public:
    Reader(const std::vector<unsigned char>& buf, std::size_t end, std::string where)
        : buf_(buf), end_(end), where_(std::move(where)) {}

    void need(std::size_t n) const {
        if (pos_ + n > end_) {
            throw Error(ErrorCode::corrupt_file, where_ + ": truncated at byte " + std::to_string(pos_));
        }
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{buf_[pos_++]} << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{buf_[pos_++]} << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    const std::vector<unsigned char>& buf_;
    std::size_t end_;
    std::string where_;
    std::size_t pos_ = 0;
};

struct Record {
    ad::Shape shape;
    std::vector<double> data;
};

std::string widths_text(const std::array<std::size_t, 3>& w) {
    return std::to_string(w[0]) + "," + std::to_string(w[1]) + "," + std::to_string(w[2]);
}

std::array<std::size_t, 3> parse_widths(const std::string& key, const std::string& text) {
    std::array<std::size_t, 3> w{};
    std::istringstream in(text);
    std::string part;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!std::getline(in, part, ',')) {
            throw Error(ErrorCode::corrupt_file, key + ": expected three widths");
        }
        w[i] = static_cast<std::size_t>(parse_integer(key, part));
    }
    return w;
}

std::string echo(const Checkpoint& c) {
    std::ostringstream out;
    out << "kind = " << c.kind << "\n"
        << "epoch = " << c.epoch << "\n";
    std::istringstream cfg(to_key_values(c.config));
    std::string line;
    while (std::getline(cfg, line)) {
        out << "config." << line << "\n";
    }
    const auto& g = c.generator_arch;
    out << "generator.present = " << (c.generator ? 1 : 0) << "\n"
        << "generator.image_size = " << g.image_size << "\n"
        << "generator.channels = " << g.channels << "\n"
        << "generator.widths = " << widths_text(g.widths) << "\n"
        << "generator.kernel = " << g.kernel << "\n"
        << "generator.stride = " << g.stride << "\n"
        << "generator.pad = " << g.pad << "\n"
        << "generator.leaky_slope = " << format_double(g.leaky_slope) << "\n";
    const auto& d = c.discriminator_arch;
    out << "discriminator.present = " << (c.discriminator ? 1 : 0) << "\n"
        << "critic.present = " << (c.critic ? 1 : 0) << "\n"
        << "discriminator.image_size = " << d.image_size << "\n"
        << "discriminator.channels = " << d.channels << "\n"
        << "discriminator.widths = " << widths_text(d.widths) << "\n"
        << "discriminator.kernel = " << d.kernel << "\n"
        << "discriminator.stride = " << d.stride << "\n"
        << "discriminator.pad = " << d.pad << "\n"
        << "discriminator.leaky_slope = " << format_double(d.leaky_slope) << "\n"
        << "discriminator.num_classes = " << d.num_classes << "\n"
        << "discriminator.code_dim = " << d.code_dim << "\n";
    const auto& a = c.augmenter_arch;
    out << "augmenter.present = " << (c.augmenter ? 1 : 0) << "\n"
        << "augmenter.image_size = " << a.image_size << "\n"
        << "augmenter.channels = " << a.channels << "\n"
        << "augmenter.z_dim = " << a.z_dim << "\n"
        << "augmenter.code_dim = " << a.code_dim << "\n"
        << "augmenter.widths = " << widths_text(a.widths) << "\n"
        << "augmenter.kernel = " << a.kernel << "\n"
        << "augmenter.stride = " << a.stride << "\n"
        << "augmenter.pad = " << a.pad << "\n";
    for (const auto& [name, state] : c.optimizers) {
        out << "optimizer." << name << " = " << state.step << "\n";
    }
    return out.str();
}

void apply_echo(Checkpoint& c, const std::string& text, std::map<std::string, std::int64_t>& optimizer_steps,
                bool present[4]) {
    KeyValues config_values;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) {
            throw Error(ErrorCode::corrupt_file, "checkpoint header line '" + line + "'");
        }
        const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
        auto integer = [&] { return parse_integer(key, value); };
        auto size = [&] { return static_cast<std::size_t>(parse_integer(key, value)); };
        if (key == "kind") c.kind = value;
        else if (key == "epoch") c.epoch = integer();
        else if (key.rfind("config.", 0) == 0) config_values.emplace_back(key.substr(7), value);
        else if (key == "generator.present") present[0] = integer() != 0;
        else if (key == "discriminator.present") present[1] = integer() != 0;
        else if (key == "augmenter.present") present[2] = integer() != 0;
        else if (key == "critic.present") present[3] = integer() != 0;
        else if (key == "generator.image_size") c.generator_arch.image_size = size();
        else if (key == "generator.channels") c.generator_arch.channels = size();
        else if (key == "generator.widths") c.generator_arch.widths = parse_widths(key, value);
        else if (key == "generator.kernel") c.generator_arch.kernel = size();
        else if (key == "generator.stride") c.generator_arch.stride = static_cast<int>(integer());
        else if (key == "generator.pad") c.generator_arch.pad = static_cast<int>(integer());
        else if (key == "generator.leaky_slope") c.generator_arch.leaky_slope = parse_number(key, value);
        else if (key == "discriminator.image_size") c.discriminator_arch.image_size = size();
        else if (key == "discriminator.channels") c.discriminator_arch.channels = size();
        else if (key == "discriminator.widths") c.discriminator_arch.widths = parse_widths(key, value);
        else if (key == "discriminator.kernel") c.discriminator_arch.kernel = size();
        else if (key == "discriminator.stride") c.discriminator_arch.stride = static_cast<int>(integer());
        else if (key == "discriminator.pad") c.discriminator_arch.pad = static_cast<int>(integer());
        else if (key == "discriminator.leaky_slope") c.discriminator_arch.leaky_slope = parse_number(key, value);
        else if (key == "discriminator.num_classes") c.discriminator_arch.num_classes = size();
        else if (key == "discriminator.code_dim") c.discriminator_arch.code_dim = size();
        else if (key == "augmenter.image_size") c.augmenter_arch.image_size = size();
        else if (key == "augmenter.channels") c.augmenter_arch.channels = size();
        else if (key == "augmenter.z_dim") c.augmenter_arch.z_dim = size();
        else if (key == "augmenter.code_dim") c.augmenter_arch.code_dim = size();
        else if (key == "augmenter.widths") c.augmenter_arch.widths = parse_widths(key, value);
        else if (key == "augmenter.kernel") c.augmenter_arch.kernel = size();
        else if (key == "augmenter.stride") c.augmenter_arch.stride = static_cast<int>(integer());
        else if (key == "augmenter.pad") c.augmenter_arch.pad = static_cast<int>(integer());
        else if (key.rfind("optimizer.", 0) == 0) optimizer_steps[key.substr(10)] = integer();
        else throw Error(ErrorCode::corrupt_file, "unknown checkpoint header key '" + key + "'");
    }
    c.config = config_from_key_values(config_values);
}

}  // namespace

std::map<std::string, nn::ParamSet*> Checkpoint::param_sets() {
    std::map<std::string, nn::ParamSet*> out;
    if (generator) out["generator"] = &generator->params();
    if (discriminator) {
        out["discriminator"] = &discriminator->params();
        out["mi_head"] = &discriminator->mi_params();
    }
    if (augmenter) out["augmenter"] = &augmenter->params();
    if (critic) {
        out["critic"] = &critic->params();
        out["critic_mi_head"] = &critic->mi_params();
    }
    return out;
}

std::map<std::string, const nn::ParamSet*> Checkpoint::param_sets() const {
    std::map<std::string, const nn::ParamSet*> out;
    for (const auto& [k, v] : const_cast<Checkpoint*>(this)->param_sets()) out[k] = v;
    return out;
}

void Checkpoint::ensure_optimizers() {
    for (const auto& [name, set] : param_sets()) {
        if (!optimizers.count(name)) {
            optimizers.emplace(name, nn::AdamState(*set));
        }
    }
}

void save_checkpoint(const Checkpoint& c, const fs::path& path) {
    Writer body;
    for (const auto& [set_name, set] : c.param_sets()) {
        for (const auto& p : set->params()) {
            body.record(set_name + "/" + p.name, p.value.shape(), p.value.data());
        }
        for (const auto& [name, t] : set->buffers()) {
            body.record(set_name + "/" + name, t.shape(), t.data());
        }
        const auto it = c.optimizers.find(set_name);
        if (it != c.optimizers.end()) {
            const auto& params = set->params();
            for (std::size_t i = 0; i < params.size(); ++i) {
                body.record("adam/" + set_name + "/m/" + params[i].name, params[i].value.shape(), it->second.m.at(i));
                body.record("adam/" + set_name + "/v/" + params[i].name, params[i].value.shape(), it->second.v.at(i));
            }
        }
    }

    Writer out;
    out.bytes(kMagic, 4);
    out.u32(kCheckpointVersion);
    out.str(echo(c));
    out.u32(body.records());
    out.bytes(body.buffer().data(), body.buffer().size());
    auto& buf = out.buffer();
    const auto crc = static_cast<std::uint32_t>(::crc32(0L, buf.data(), static_cast<uInt>(buf.size())));
    out.u32(crc);

    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error(ErrorCode::unwritable_directory, "cannot create " + path.string());
    }
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) {
        throw Error(ErrorCode::unwritable_directory, "write failed for " + path.string());
    }
}

Checkpoint load_checkpoint(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw Error(ErrorCode::missing_file, "cannot open checkpoint " + path.string());
    }
    const std::vector<unsigned char> buf{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
    const std::string where = path.string();
    if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw Error(ErrorCode::corrupt_file, where + ": not a checkpoint (bad magic or too short)");
    }
    Reader header(buf, buf.size(), where);
    header.u32();
    const std::uint32_t version = header.u32();
    if (version != kCheckpointVersion) {
        throw Error(ErrorCode::version_mismatch, where + ": version " + std::to_string(version) + ", expected " +
                                                     std::to_string(kCheckpointVersion));
    }
    const std::size_t body_end = buf.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= std::uint32_t{buf[body_end + i]} << (8 * i);
    const auto crc = static_cast<std::uint32_t>(::crc32(0L, buf.data(), static_cast<uInt>(body_end)));
    if (crc != stored) {
        throw Error(ErrorCode::corrupt_file, where + ": checksum mismatch");
    }

    Reader in(buf, body_end, where);
    in.u32();
    in.u32();
    Checkpoint c;
    std::map<std::string, std::int64_t> steps;
    bool present[4] = {false, false, false, false};
    apply_echo(c, in.str(), steps, present);

    std::map<std::string, Record> records;
    const std::uint32_t count = in.u32();
    for (std::uint32_t r = 0; r < count; ++r) {
        std::string name = in.str();
        Record rec;
        const std::uint32_t rank = in.u32();
        if (rank > 8) {
            throw Error(ErrorCode::corrupt_file, where + ": record " + name + " has rank " + std::to_string(rank));
        }
        std::size_t numel = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            rec.shape.push_back(static_cast<std::size_t>(in.u64()));
            numel *= rec.shape.back();
        }
        in.need(numel * 8);
        rec.data.resize(numel);
        for (double& v : rec.data) v = in.f64();
        records.emplace(std::move(name), std::move(rec));
    }
    if (in.pos() != body_end) {
        throw Error(ErrorCode::corrupt_file, where + ": trailing bytes after records");
    }

    try {
        if (present[0]) c.generator = std::make_unique<models::GeneratorNet>(c.generator_arch, 0);
        if (present[1]) c.discriminator = std::make_unique<models::DiscriminatorNet>(c.discriminator_arch, 0);
        if (present[2]) c.augmenter = std::make_unique<models::AugmentGeneratorNet>(c.augmenter_arch, 0);
        if (present[3]) c.critic = std::make_unique<models::DiscriminatorNet>(c.discriminator_arch, 0);
    } catch (const Error& e) {
        throw Error(ErrorCode::corrupt_file, where + ": bad architecture: " + e.what());
    }

    auto take = [&](const std::string& name, const ad::Shape& shape, std::span<double> dest) {
        const auto it = records.find(name);
        if (it == records.end()) {
            throw Error(ErrorCode::corrupt_file, where + ": missing record " + name);
        }
        if (it->second.shape != shape) {
            throw Error(ErrorCode::corrupt_file, where + ": record " + name + " has shape " +
                                                     ad::shape_to_string(it->second.shape) + ", expected " +
                                                     ad::shape_to_string(shape));
        }
        std::copy(it->second.data.begin(), it->second.data.end(), dest.begin());
        records.erase(it);
    };
    for (auto& [set_name, set] : c.param_sets()) {
        for (auto& p : set->params()) {
            take(set_name + "/" + p.name, p.value.shape(), p.value.mutable_data());
        }
        for (auto& [name, t] : set->buffers()) {
            ad::Tensor handle = t;
            take(set_name + "/" + name, handle.shape(), handle.mutable_data());
        }
        const auto step = steps.find(set_name);
        if (step != steps.end()) {
            nn::AdamState state(*set);
            state.step = step->second;
            const auto& params = set->params();
            for (std::size_t i = 0; i < params.size(); ++i) {
                take("adam/" + set_name + "/m/" + params[i].name, params[i].value.shape(), state.m[i]);
                take("adam/" + set_name + "/v/" + params[i].name, params[i].value.shape(), state.v[i]);
            }
            c.optimizers.emplace(set_name, std::move(state));
        }
    }
    if (!records.empty()) {
        throw Error(ErrorCode::corrupt_file, where + ": unexpected record " + records.begin()->first);
    }
    return c;
}

}  // namespace rmgan::pipeline
