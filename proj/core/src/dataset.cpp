#include "misa/data/dataset.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "misa/common/binary_io.hpp"
#include "misa/common/error.hpp"

namespace misa::data {
namespace {

void copy_row(const Tensor& from, std::size_t r, Tensor& to, std::size_t dst) {
  std::copy(from.row_span(r).begin(), from.row_span(r).end(), to.row_span(dst).begin());
}

}  // namespace

OfflineDataset::OfflineDataset(Tensor states, Tensor actions, Tensor rewards, Tensor next_states,
                               Tensor terminals, nlohmann::json provenance)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      rewards_(std::move(rewards)),
      next_states_(std::move(next_states)),
      terminals_(std::move(terminals)),
      provenance_(std::move(provenance)) {
  const std::size_t n = states_.rows();
  if (n == 0 || states_.empty()) throw Error("dataset must contain at least one transition");
  if (actions_.rows() != n || rewards_.size() != n || next_states_.rows() != n ||
      terminals_.size() != n || next_states_.cols() != states_.cols()) {
    throw ShapeError(-1, "dataset columns disagree on the transition count or state size");
  }
  for (const Tensor* t : {&states_, &actions_, &rewards_, &next_states_, &terminals_}) {
    if (!t->all_finite()) throw NumericalError("dataset contains non-finite values");
  }
}

OfflineDataset OfflineDataset::from_transitions(const std::vector<Transition>& transitions,
                                                nlohmann::json provenance) {
  if (transitions.empty()) throw Error("dataset must contain at least one transition");
  const std::size_t n = transitions.size();
  const std::size_t sd = transitions.front().s.size();
  const std::size_t ad = transitions.front().a.size();
  Tensor s = Tensor::matrix(n, sd);
  Tensor a = Tensor::matrix(n, ad);
  Tensor r = Tensor::matrix(n, 1);
  Tensor sn = Tensor::matrix(n, sd);
  Tensor d = Tensor::matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = transitions[i];
    if (t.s.size() != sd || t.a.size() != ad || t.s_next.size() != sd) {
      throw ShapeError(-1, "transition " + std::to_string(i) + " has inconsistent dimensions");
    }
    std::copy(t.s.begin(), t.s.end(), s.row_span(i).begin());
    std::copy(t.a.begin(), t.a.end(), a.row_span(i).begin());
    r[i] = t.r;
    std::copy(t.s_next.begin(), t.s_next.end(), sn.row_span(i).begin());
    d[i] = t.terminal ? 1.0 : 0.0;
  }
  return OfflineDataset(std::move(s), std::move(a), std::move(r), std::move(sn), std::move(d),
                        std::move(provenance));
}

Transition OfflineDataset::transition(std::size_t i) const {
  Transition t;
  t.s.assign(states_.row_span(i).begin(), states_.row_span(i).end());
  t.a.assign(actions_.row_span(i).begin(), actions_.row_span(i).end());
  t.r = rewards_[i];
  t.s_next.assign(next_states_.row_span(i).begin(), next_states_.row_span(i).end());
  t.terminal = terminals_[i] != 0.0;
  return t;
}

Batch OfflineDataset::gather(std::span<const std::size_t> indices) const {
  const std::size_t b = indices.size();
  Batch batch{Tensor::matrix(b, state_dim()), Tensor::matrix(b, action_dim()),
              Tensor::matrix(b, 1), Tensor::matrix(b, state_dim()), Tensor::matrix(b, 1)};
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t i = indices[k];
    if (i >= size()) throw Error("dataset index " + std::to_string(i) + " out of range");
    copy_row(states_, i, batch.states, k);
    copy_row(actions_, i, batch.actions, k);
    batch.rewards[k] = rewards_[i];
    copy_row(next_states_, i, batch.next_states, k);
    batch.terminals[k] = terminals_[i];
  }
  return batch;
}

std::vector<std::size_t> OfflineDataset::sample_indices(std::size_t n, Rng& rng) const {
  std::uniform_int_distribution<std::size_t> pick(0, size() - 1);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch OfflineDataset::sample_batch(std::size_t n, Rng& rng) const {
  const auto idx = sample_indices(n, rng);
  return gather(idx);
}

void write_dataset(std::ostream& out, const OfflineDataset& ds) {
  const nlohmann::json header = {{"version", 1},
                                 {"state_dim", ds.state_dim()},
                                 {"action_dim", ds.action_dim()},
                                 {"count", ds.size()},
                                 {"provenance", ds.provenance()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.states().row_span(i)) io::write_f32(out, static_cast<float>(v));
    for (double v : ds.actions().row_span(i)) io::write_f32(out, static_cast<float>(v));
    io::write_f32(out, static_cast<float>(ds.rewards()[i]));
    for (double v : ds.next_states().row_span(i)) io::write_f32(out, static_cast<float>(v));
    io::write_f32(out, static_cast<float>(ds.terminals()[i]));
  }
}

OfflineDataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "missing JSON header line");
  const std::uint64_t header_bytes = line.size() + 1;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.byte, std::string("header is not valid JSON: ") + e.what());
  }
  std::size_t sd = 0;
  std::size_t ad = 0;
  std::size_t count = 0;
  try {
    if (header.at("version").get<int>() != 1) {
      throw ParseError(0, "unsupported dataset version " + header.at("version").dump());
    }
    sd = header.at("state_dim").get<std::size_t>();
    ad = header.at("action_dim").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("bad header: ") + e.what());
  }
  if (count == 0) throw ParseError(header_bytes, "dataset header declares count 0");
  if (sd == 0 || ad == 0) throw ParseError(0, "state_dim and action_dim must be positive");

  const std::size_t per_record = 2 * sd + ad + 2;
  const std::uint64_t expected = static_cast<std::uint64_t>(count) * per_record * 4;
  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
  if (payload.size() != expected) {
    throw ParseError(header_bytes + std::min<std::uint64_t>(payload.size(), expected),
                     "expected " + std::to_string(expected) + " bytes of records for count " +
                         std::to_string(count) + ", found " + std::to_string(payload.size()));
  }

  Tensor s = Tensor::matrix(count, sd);
  Tensor a = Tensor::matrix(count, ad);
  Tensor r = Tensor::matrix(count, 1);
  Tensor sn = Tensor::matrix(count, sd);
  Tensor d = Tensor::matrix(count, 1);
  const unsigned char* p = payload.data();
  const auto next = [&p] {
    const double v = io::decode_f32(p);
    p += 4;
    return v;
  };
  for (std::size_t i = 0; i < count; ++i) {
    for (double& v : s.row_span(i)) v = next();
    for (double& v : a.row_span(i)) v = next();
    r[i] = next();
    for (double& v : sn.row_span(i)) v = next();
    d[i] = next();
    if (d[i] != 0.0 && d[i] != 1.0) {
      throw ParseError(header_bytes + (i + 1) * per_record * 4 - 4,
                       "terminal flag of record " + std::to_string(i) + " is not 0 or 1");
    }
  }
  nlohmann::json provenance = header.value("provenance", nlohmann::json::object());
  return OfflineDataset(std::move(s), std::move(a), std::move(r), std::move(sn), std::move(d),
                        std::move(provenance));
}

void save_dataset(const OfflineDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_dataset(out, ds);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

OfflineDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_dataset(in);
}

}  // namespace misa::data
