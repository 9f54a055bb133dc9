#include "drc/derangement.hpp"

#include <algorithm>
#include <numeric>

#include "drc/error.hpp"

namespace drc {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

std::size_t EventOrder::position_of(const std::string& name) const {
  return static_cast<std::size_t>(std::find(sequence.begin(), sequence.end(), name) - sequence.begin());
}

std::vector<std::string> build_derangement_set(const SortedEventSeq& s_sa, const std::vector<std::string>& gt,
                                               std::size_t r) {
  std::vector<std::string> out;
  for (const EventCount& e : s_sa.ordered) {
    if (out.size() == r) break;
    if (!contains(gt, e.name)) out.push_back(e.name);
  }
  if (out.size() < r) {
    throw ConfigError("derangement set size r=" + std::to_string(r) + " exceeds the " +
                      std::to_string(out.size()) + " event types outside the ground truth");
  }
  return out;
}

std::vector<std::size_t> sample_derangement(std::size_t m, Rng& rng) {
  if (m < 2) throw DomainError("sample_derangement: no derangement of " + std::to_string(m) + " elements");
  std::vector<std::size_t> p(m);
  for (;;) {
    std::iota(p.begin(), p.end(), 0);
    rng.shuffle(p);
    bool fixed = false;
    for (std::size_t i = 0; i < m && !fixed; ++i) fixed = p[i] == i;
    if (!fixed) return p;
  }
}

std::vector<std::size_t> sample_derangement_sequential(std::size_t m, Rng& rng) {
  if (m < 2) throw DomainError("sample_derangement: no derangement of " + std::to_string(m) + " elements");
  std::vector<std::size_t> p(m);
  std::vector<bool> used(m);
  std::vector<std::size_t> candidates;
  for (;;) {
    std::fill(used.begin(), used.end(), false);
    bool stuck = false;
    for (std::size_t slot = 0; slot < m && !stuck; ++slot) {
      candidates.clear();
      for (std::size_t e = 0; e < m; ++e) {
        if (e != slot && !used[e]) candidates.push_back(e);
      }
      if (candidates.empty()) {
        stuck = true;
        break;
      }
      p[slot] = candidates[rng.below(candidates.size())];
      used[p[slot]] = true;
    }
    if (!stuck) return p;
  }
}

DerangeResult maybe_derange(const DerangementContext& ctx, const EdmConfig& cfg, Rng& rng) {
  if (!ctx.partition || !ctx.s_sa || !ctx.s_init) throw ContractError("maybe_derange: incomplete context");
  if (ctx.gt.empty()) throw ContractError("maybe_derange: empty ground-truth set");
  const EventOrder& init = *ctx.s_init;
  DerangeResult res{init, false};

  // drawn unconditionally so the random stream does not depend on the gate
  const double u = rng.uniform();
  bool has_major = false;
  for (const std::string& e : ctx.gt) has_major = has_major || ctx.partition->is_major(e);
  if (!has_major || !(u < cfg.q)) return res;

  const std::vector<std::string> ed = build_derangement_set(*ctx.s_sa, ctx.gt, cfg.r);
  if (ed.size() < 2) return res;

  // slots of S_init occupied by E_D, in slot order
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < init.size(); ++i) {
    if (contains(ed, init.sequence[i])) slots.push_back(i);
  }
  const std::vector<std::size_t> perm =
      cfg.compat_sampler ? sample_derangement_sequential(slots.size(), rng) : sample_derangement(slots.size(), rng);
  for (std::size_t j = 0; j < slots.size(); ++j) {
    res.order.sequence[slots[j]] = init.sequence[slots[perm[j]]];
  }
  res.activated = true;
  return res;
}

std::vector<std::vector<std::size_t>> enumerate_derangements(std::size_t m) {
  if (m > 8) throw DomainError("enumerate_derangements: m=" + std::to_string(m) + " exceeds the limit of 8");
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> p(m);
  std::iota(p.begin(), p.end(), 0);
  do {
    bool fixed = false;
    for (std::size_t i = 0; i < m && !fixed; ++i) fixed = p[i] == i;
    if (!fixed) out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  // m = 0 yields the empty permutation, which trivially has no fixed point
  return out;
}

EventOrder random_event_order(const Dataset& d, Rng& rng) {
  EventOrder o;
  for (const EventType& e : d.inventory()) o.sequence.push_back(e.name);
  rng.shuffle(o.sequence);
  return o;
}

}  // namespace drc
