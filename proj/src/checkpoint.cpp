#include "ahp/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <sstream>

namespace ahp {

namespace {

constexpr char kMagic[8] = {'A', 'H', 'P', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void shape(const Matrix& m) {
    u64(m.rows);
    u64(m.cols);
  }
  void values(const Matrix& m) {
    for (double x : m.data) f64(x);
  }
  std::string take() { return std::move(out_); }

 private:
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string r = s_.substr(pos_, n);
    pos_ += n;
    return r;
  }
  std::string str() { return raw(u32()); }
  Matrix shaped() {
    const auto rows = u64();
    const auto cols = u64();
    if (cols != 0 && rows > (s_.size() - pos_) / 8 / cols) throw ParseError("checkpoint: implausible tensor shape");
    return Matrix(rows, cols);
  }
  void values(Matrix& m) {
    for (double& x : m.data) x = f64();
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  void need(std::size_t n) const {
    if (s_.size() - pos_ < n) throw ParseError("checkpoint: truncated file");
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(s_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const CheckpointFile& ck) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u64(ck.header_json.size());
  w.bytes(ck.header_json.data(), ck.header_json.size());
  w.u32(static_cast<std::uint32_t>(ck.params.size()));
  for (const auto& [name, m] : ck.params) {
    w.str(name);
    w.shape(m);
    w.values(m);
  }
  w.u32(static_cast<std::uint32_t>(ck.optimizers.size()));
  for (const auto& [name, st] : ck.optimizers) {
    w.str(name);
    w.u64(st.step);
    w.f64(st.beta1);
    w.f64(st.beta2);
    w.f64(st.eps);
    w.u32(static_cast<std::uint32_t>(st.first_moment.size()));
    for (const auto& [pname, m] : st.first_moment) {
      const auto it = st.second_moment.find(pname);
      if (it == st.second_moment.end() || !it->second.same_shape(m))
        throw InvariantError("optimizer moments for '" + pname + "' are inconsistent");
      w.str(pname);
      w.shape(m);
      w.values(m);
      w.values(it->second);
    }
  }
  return w.take();
}

CheckpointFile decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw ParseError("not a checkpoint file");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  CheckpointFile ck;
  ck.header_json = r.raw(r.u64());
  const auto n_params = r.u32();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    auto name = r.str();
    Matrix m = r.shaped();
    r.values(m);
    ck.params.emplace(std::move(name), std::move(m));
  }
  const auto n_optim = r.u32();
  for (std::uint32_t i = 0; i < n_optim; ++i) {
    auto name = r.str();
    AdamState st;
    st.step = r.u64();
    st.beta1 = r.f64();
    st.beta2 = r.f64();
    st.eps = r.f64();
    const auto n = r.u32();
    for (std::uint32_t j = 0; j < n; ++j) {
      auto pname = r.str();
      Matrix m = r.shaped();
      Matrix v(m.rows, m.cols);
      r.values(m);
      r.values(v);
      st.first_moment.emplace(pname, std::move(m));
      st.second_moment.emplace(std::move(pname), std::move(v));
    }
    ck.optimizers.emplace(std::move(name), std::move(st));
  }
  if (!r.done()) throw ParseError("checkpoint: trailing bytes");
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const CheckpointFile& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path.string());
  const auto bytes = encode_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace ahp
