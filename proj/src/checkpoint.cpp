#include "lane/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace lane {

namespace {

constexpr char kMagic[8] = {'L', 'A', 'N', 'E', 'C', 'K', 'P', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void save_store(std::ostream& out, const ParameterStore& store,
                std::uint8_t tag) {
  for (const auto& up : store.items()) {
    out.put(static_cast<char>(tag));
    put_u64(out, up->name.size());
    out.write(up->name.data(), static_cast<std::streamsize>(up->name.size()));
    put_u64(out, static_cast<std::uint64_t>(up->shape.rows));
    put_u64(out, static_cast<std::uint64_t>(up->shape.cols));
    for (double v : up->value) put_f64(out, v);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& m,
                     const nlohmann::json& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  const std::string mtext = manifest.dump();
  put_u64(out, mtext.size());
  out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
  put_u64(out, m.theta().items().size() + m.phi().items().size());
  save_store(out, m.theta(), 0);
  save_store(out, m.phi(), 1);
  if (!out) throw CheckpointError("write failure: " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path,
                                       nlohmann::json* manifest_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw CheckpointError("not a checkpoint file: " + path);
  }
  const std::uint64_t mlen = get_u64(in);
  std::string mtext(mlen, '\0');
  in.read(mtext.data(), static_cast<std::streamsize>(mlen));
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(mtext);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("bad manifest: " + std::string(e.what()));
  }

  RunConfig cfg = RunConfig::from_json(manifest.at("config"));
  Vocab src(manifest.at("src_vocab").get<std::vector<std::string>>());
  Vocab dst(manifest.at("dst_vocab").get<std::vector<std::string>>());
  auto model = std::make_unique<Model>(cfg.model_config(), src, dst);

  const std::uint64_t count = get_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const int tag = in.get();
    const std::uint64_t nlen = get_u64(in);
    std::string name(nlen, '\0');
    in.read(name.data(), static_cast<std::streamsize>(nlen));
    const std::uint64_t rows = get_u64(in);
    const std::uint64_t cols = get_u64(in);
    if (!in) throw CheckpointError("truncated checkpoint: " + path);
    ParameterStore& store = tag == 0 ? model->theta() : model->phi();
    if (!store.contains(name)) {
      throw CheckpointError("unexpected parameter in checkpoint: " + name);
    }
    Parameter& p = store.at(name);
    if (static_cast<std::uint64_t>(p.shape.rows) != rows ||
        static_cast<std::uint64_t>(p.shape.cols) != cols) {
      throw CheckpointError("shape mismatch for " + name + ": file has (" +
                            std::to_string(rows) + "x" + std::to_string(cols) +
                            "), model wants " + p.shape.str());
    }
    for (double& v : p.value) v = get_f64(in);
  }
  if (!in) throw CheckpointError("truncated checkpoint: " + path);
  if (manifest_out != nullptr) *manifest_out = manifest;
  return model;
}

nlohmann::json make_manifest(const RunConfig& cfg, const Model& m, int lesson) {
  nlohmann::json j;
  j["config"] = cfg.to_json();
  j["seed"] = cfg.seed;
  j["lesson"] = lesson;
  j["src_vocab"] = m.src_vocab().tokens();
  j["dst_vocab"] = m.dst_vocab().tokens();
  return j;
}

}  // namespace lane
