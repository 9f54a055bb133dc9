#pragma once

// Event Derangement Module.
//
// With probability q, and only when the ground-truth events of an instance
// intersect the major events, the r most frequent non-ground-truth event types
// (E_D) swap positions among themselves so that none of them keeps its slot.
// Every other slot of the initial order, in particular every ground-truth
// event, stays where it was.

#include <cstddef>
#include <string>
#include <vector>

#include "drc/corpus.hpp"
#include "drc/rng.hpp"

namespace drc {

// A permutation of all event types; slot i is the i-th event token.
struct EventOrder {
  std::vector<std::string> sequence;

  std::size_t size() const { return sequence.size(); }
  // Slot of `name`, or size() if absent.
  std::size_t position_of(const std::string& name) const;
  bool operator==(const EventOrder&) const = default;
};

struct EdmConfig {
  double q = 0.2;
  std::size_t r = 1;
  // Line-by-line sequential sampler (restarts on a dead end) instead of the
  // uniform rejection sampler.
  bool compat_sampler = false;
};

struct DerangementContext {
  std::vector<std::string> gt;  // E_GT
  const MajorMinorPartition* partition = nullptr;
  const SortedEventSeq* s_sa = nullptr;
  const EventOrder* s_init = nullptr;
};

struct DerangeResult {
  EventOrder order;
  bool activated = false;
};

// First r events of S_SA that are not in gt, in S_SA order.
std::vector<std::string> build_derangement_set(const SortedEventSeq& s_sa, const std::vector<std::string>& gt,
                                               std::size_t r);

// Uniformly random fixed-point-free permutation of 0..m-1 (rejection sampling).
std::vector<std::size_t> sample_derangement(std::size_t m, Rng& rng);

// Sequential sampler: walks the slots in order, each picks uniformly among the
// unused elements other than its own, restarting when the last slot is stuck
// with its own element.
std::vector<std::size_t> sample_derangement_sequential(std::size_t m, Rng& rng);

DerangeResult maybe_derange(const DerangementContext& ctx, const EdmConfig& cfg, Rng& rng);

// Every derangement of 0..m-1, lexicographically sorted. m <= 8.
std::vector<std::vector<std::size_t>> enumerate_derangements(std::size_t m);

// Random permutation of the inventory, used as S_init.
EventOrder random_event_order(const Dataset& d, Rng& rng);

}  // namespace drc
