#include "radsum/checkpoint.hpp"

#include <cstring>
#include <stdexcept>

#include "radsum/io.hpp"

namespace radsum::checkpoint {

namespace {

// Layout (host byte order, doubles raw):
//   magic "RSCKPT01"
//   u64 parameter count
//   per parameter: u64 name length, name bytes, u64 rank, u64 dims[rank],
//                  f64 values[numel]
//   u8 optimizer flag
//   if set: i64 step, then per parameter f64 m[numel], f64 v[numel]
constexpr char kMagic[8] = {'R', 'S', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::string& out, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

void put_doubles(std::string& out, const std::vector<double>& v) {
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

class Reader {
public:
    Reader(const std::string& data, std::string path)
        : data_(data), path_(std::move(path)) {}

    std::uint64_t u64() {
        need(8);
        std::uint64_t v;
        std::memcpy(&v, data_.data() + pos_, 8);
        pos_ += 8;
        return v;
    }

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }

    std::string bytes(std::uint64_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::vector<double> doubles(std::uint64_t n) {
        need(n * sizeof(double));
        std::vector<double> v(n);
        std::memcpy(v.data(), data_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return v;
    }

    bool exhausted() const { return pos_ == data_.size(); }

    void need(std::uint64_t n) const {
        if (pos_ + n > data_.size()) {
            throw std::runtime_error("truncated checkpoint: " + path_);
        }
    }

private:
    const std::string& data_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const model::ParameterStore& params,
                     const OptimizerState* optimizer) {
    if (optimizer != nullptr &&
        (optimizer->m.size() != params.size() || optimizer->v.size() != params.size())) {
        throw std::invalid_argument("optimizer state does not match parameter count");
    }
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_u64(out, params.size());
    for (const auto& [name, t] : params.items()) {
        put_u64(out, name.size());
        out.append(name);
        const auto& shape = t.shape();
        put_u64(out, shape.size());
        for (auto d : shape) put_u64(out, static_cast<std::uint64_t>(d));
        put_doubles(out, t.value());
    }
    out.push_back(optimizer != nullptr ? '\1' : '\0');
    if (optimizer != nullptr) {
        put_u64(out, static_cast<std::uint64_t>(optimizer->step));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto numel = static_cast<std::size_t>(params.items()[i].second.numel());
            if (optimizer->m[i].size() != numel || optimizer->v[i].size() != numel) {
                throw std::invalid_argument("optimizer buffers do not match parameter shapes");
            }
            put_doubles(out, optimizer->m[i]);
            put_doubles(out, optimizer->v[i]);
        }
    }
    io::write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
    const std::string data = io::read_text_file(path);
    if (data.size() < sizeof(kMagic) || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not a checkpoint file: " + path);
    }
    Reader reader(data, path);
    reader.bytes(sizeof(kMagic));  // skip magic, already validated

    Checkpoint ck;
    const std::uint64_t count = reader.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::string name = reader.bytes(reader.u64());
        const std::uint64_t rank = reader.u64();
        tensor::Shape shape(rank);
        std::uint64_t numel = 1;
        for (auto& d : shape) {
            d = static_cast<tensor::Index>(reader.u64());
            numel *= static_cast<std::uint64_t>(d);
        }
        ck.params.add(name, tensor::Tensor(std::move(shape), reader.doubles(numel), true));
    }
    ck.has_optimizer = reader.u8() != 0;
    if (ck.has_optimizer) {
        ck.optimizer.step = static_cast<std::int64_t>(reader.u64());
        ck.optimizer.m.resize(count);
        ck.optimizer.v.resize(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto numel =
                static_cast<std::uint64_t>(ck.params.items()[i].second.numel());
            ck.optimizer.m[i] = reader.doubles(numel);
            ck.optimizer.v[i] = reader.doubles(numel);
        }
    }
    if (!reader.exhausted()) {
        throw std::runtime_error("trailing bytes in checkpoint: " + path);
    }
    return ck;
}

}  // namespace radsum::checkpoint
