#include "actmod/checkpoint.hpp"

#include <boost/crc.hpp>
#include <cmath>
#include <fstream>
#include <sstream>

#include "actmod/binary_io.hpp"
#include "actmod/config.hpp"
#include "actmod/errors.hpp"

namespace actmod {

namespace fs = std::filesystem;
namespace bin = binary;

namespace {

constexpr char kMagic[4] = {'A', 'M', 'C', 'K'};
constexpr std::uint32_t kMaxString = 1u << 24;
constexpr std::uint64_t kMaxCount = 1ull << 32;

std::uint32_t crc32(const std::string& bytes) {
  boost::crc_32_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

void write_matrix(std::ostream& os, const Matrix& m) {
  bin::write_u64(os, m.rows());
  bin::write_u64(os, m.cols());
  for (double v : m.values()) bin::write_f64(os, v);
}

Matrix read_matrix(std::istream& is, const char* what) {
  const std::uint64_t r = bin::read_u64(is, what);
  const std::uint64_t c = bin::read_u64(is, what);
  if (r > kMaxCount || c > kMaxCount || (r != 0 && c > kMaxCount / r))
    throw CorruptionError(std::string("implausible shape for ") + what);
  std::vector<double> values(r * c);
  for (double& v : values) {
    v = bin::read_f64(is, what);
    if (!std::isfinite(v))
      throw CorruptionError(std::string("non-finite value in ") + what);
  }
  return Matrix(r, c, std::move(values));
}

void write_names(std::ostream& os, const std::vector<std::string>& names) {
  bin::write_u64(os, names.size());
  for (const auto& n : names) bin::write_string(os, n);
}

std::vector<std::string> read_names(std::istream& is) {
  const std::uint64_t n = bin::read_u64(is, "name count");
  if (n > kMaxCount) throw CorruptionError("implausible name count");
  std::vector<std::string> out;
  for (std::uint64_t i = 0; i < n; ++i)
    out.push_back(bin::read_string(is, kMaxString, "name"));
  return out;
}

void write_actions(std::ostream& os, const ActionVocabulary& v) {
  write_names(os, v.names());
  write_matrix(os, v.vectors());
}

void write_adverbs(std::ostream& os, const AdverbVocabulary& v) {
  write_names(os, v.names());
  for (std::size_t a : v.antonyms()) bin::write_u64(os, a);
  bin::write_u32(os, v.has_vectors() ? 1 : 0);
  if (v.has_vectors()) write_matrix(os, v.vectors());
}

}  // namespace

std::uint32_t vocabulary_digest(const ActionVocabulary& actions) {
  std::ostringstream os;
  write_actions(os, actions);
  return crc32(os.str());
}

std::uint32_t vocabulary_digest(const AdverbVocabulary& adverbs) {
  std::ostringstream os;
  write_adverbs(os, adverbs);
  return crc32(os.str());
}

std::string encode_checkpoint(const TrainConfig& train, const TrainState& state) {
  const ModelParams& p = state.params;
  std::ostringstream os;
  os.write(kMagic, 4);
  bin::write_u32(os, kCheckpointVersion);
  bin::write_string(os, model_config_json(p.config()));
  bin::write_string(os, train_config_json(train));
  bin::write_u32(os, vocabulary_digest(p.actions()));
  bin::write_u32(os, vocabulary_digest(p.adverbs()));
  write_actions(os, p.actions());
  write_adverbs(os, p.adverbs());

  bin::write_u64(os, state.epoch);
  std::ostringstream rng;
  rng << state.rng;
  bin::write_string(os, rng.str());

  bin::write_u64(os, state.log.epochs.size());
  for (const auto& e : state.log.epochs) {
    bin::write_u64(os, e.epoch);
    bin::write_u32(os, static_cast<std::uint32_t>(e.stage));
    bin::write_f64(os, e.action_loss);
    bin::write_f64(os, e.adverb_loss);
    bin::write_f64(os, e.grad_norm);
    bin::write_u64(os, e.batches);
  }

  const auto params = p.parameters();
  bin::write_u64(os, params.size());
  for (const Parameter* q : params) {
    bin::write_string(os, q->name);
    bin::write_u32(os, static_cast<std::uint32_t>(q->group));
    write_matrix(os, q->value);
    write_matrix(os, q->adam_m);
    write_matrix(os, q->adam_v);
    bin::write_u64(os, q->step);
  }
  std::string bytes = os.str();
  std::ostringstream tail;
  bin::write_u32(tail, crc32(bytes));
  return bytes + tail.str();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 12) throw CorruptionError("checkpoint truncated");
  if (bytes.compare(0, 4, kMagic, 4) != 0)
    throw DataError("not a checkpoint (bad magic)");
  std::istringstream head(bytes.substr(4, 4));
  const std::uint32_t version = bin::read_u32(head);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint format version " + std::to_string(version) +
                    " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  const std::string body = bytes.substr(0, bytes.size() - 4);
  std::istringstream tail(bytes.substr(bytes.size() - 4));
  if (bin::read_u32(tail) != crc32(body))
    throw CorruptionError("checkpoint digest mismatch (corrupt or truncated)");

  std::istringstream is(body.substr(8));
  const ModelConfig model =
      parse_model_config(bin::read_string(is, kMaxString, "model config"));
  const TrainConfig train =
      parse_train_config(bin::read_string(is, kMaxString, "train config"));
  const std::uint32_t action_digest = bin::read_u32(is);
  const std::uint32_t adverb_digest = bin::read_u32(is);

  auto action_names = read_names(is);
  Matrix action_vectors = read_matrix(is, "action vectors");
  ActionVocabulary actions(std::move(action_names), std::move(action_vectors));
  auto adverb_names = read_names(is);
  std::vector<std::size_t> antonyms;
  for (std::size_t i = 0; i < adverb_names.size(); ++i)
    antonyms.push_back(bin::read_u64(is, "antonym"));
  std::optional<Matrix> adverb_vectors;
  if (bin::read_u32(is, "flag")) adverb_vectors = read_matrix(is, "adverb vectors");
  AdverbVocabulary adverbs(std::move(adverb_names), std::move(antonyms),
                           std::move(adverb_vectors));
  if (vocabulary_digest(actions) != action_digest ||
      vocabulary_digest(adverbs) != adverb_digest)
    throw CorruptionError("checkpoint vocabulary digest mismatch");

  const std::uint64_t epoch = bin::read_u64(is, "epoch");
  Rng rng;
  {
    std::istringstream rs(bin::read_string(is, kMaxString, "rng state"));
    rs >> rng;
    if (!rs) throw CorruptionError("unreadable RNG state");
  }

  TrainLog log;
  const std::uint64_t n_epochs = bin::read_u64(is, "log length");
  if (n_epochs > kMaxCount) throw CorruptionError("implausible log length");
  for (std::uint64_t i = 0; i < n_epochs; ++i) {
    EpochStats e;
    e.epoch = bin::read_u64(is, "log");
    const std::uint32_t stage = bin::read_u32(is, "log");
    if (stage > 1) throw CorruptionError("bad stage tag in log");
    e.stage = static_cast<Stage>(stage);
    e.action_loss = bin::read_f64(is, "log");
    e.adverb_loss = bin::read_f64(is, "log");
    e.grad_norm = bin::read_f64(is, "log");
    e.batches = bin::read_u64(is, "log");
    log.epochs.push_back(e);
  }

  // Shapes come from the config; values are overwritten below.
  Rng scratch(0);
  ModelParams params(model, std::move(actions), std::move(adverbs), scratch);
  const auto slots = params.parameters();
  const std::uint64_t n_params = bin::read_u64(is, "parameter count");
  if (n_params != slots.size()) {
    throw CorruptionError("checkpoint holds " + std::to_string(n_params) +
                          " parameters, model expects " +
                          std::to_string(slots.size()));
  }
  for (Parameter* q : slots) {
    const std::string name = bin::read_string(is, kMaxString, "parameter name");
    if (name != q->name)
      throw CorruptionError("parameter '" + name + "' where '" + q->name +
                            "' was expected");
    const std::uint32_t group = bin::read_u32(is, "group");
    if (group != static_cast<std::uint32_t>(q->group))
      throw CorruptionError("parameter group mismatch for '" + name + "'");
    Matrix value = read_matrix(is, "parameter");
    Matrix m = read_matrix(is, "adam m");
    Matrix v = read_matrix(is, "adam v");
    if (!value.same_shape(q->value) || !m.same_shape(q->value) ||
        !v.same_shape(q->value))
      throw CorruptionError("shape mismatch for parameter '" + name + "'");
    q->value = std::move(value);
    q->adam_m = std::move(m);
    q->adam_v = std::move(v);
    q->step = bin::read_u64(is, "step");
    q->zero_grad();
  }
  if (is.peek() != std::char_traits<char>::eof())
    throw CorruptionError("trailing bytes in checkpoint");
  return Checkpoint{train, TrainState{std::move(params), rng, epoch, log}};
}

void save_checkpoint(const TrainConfig& train, const TrainState& state,
                     const fs::path& path) {
  const std::string bytes = encode_checkpoint(train, state);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot write checkpoint '" + tmp.string() + "'");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw DataError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return decode_checkpoint(ss.str());
  } catch (const CorruptionError& e) {
    throw CorruptionError(path.string() + ": " + e.what());
  }
}

}  // namespace actmod
