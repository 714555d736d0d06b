#pragma once

/// Seeded temporal transformations over frame sequences.
///
/// Five transformations alter temporal structure while preserving frame
/// content: Add (duplicate k frames into random slots), Delete (drop k
/// frames), Replace (overwrite k positions with donor frames), Reverse, and
/// Shuffle. Each is planned first and applied second: planning draws every
/// random choice from an explicit seed and records a concrete edit script;
/// applying a plan is pure and involves no RNG, so plans are inspectable,
/// auditable, and byte-stable in logs.
///
/// Length contracts: |add_k| = T+k, |delete_k| = T-k, replace/reverse/shuffle
/// keep T.
///
/// Conventions where the underlying operation leaves room:
///   - Add selects k distinct source frames without replacement and inserts
///     the duplicates sequentially, each at a uniform slot of the sequence as
///     grown so far; the recorded slots are the final ones.
///   - Shuffle rejects the identity permutation and resamples; a no-op cannot
///     stress temporal order.
///   - Replace draws each donor independently from positions outside the
///     target set, so two targets may receive the same donor.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "videostf/errors.hpp"
#include "videostf/frames.hpp"
#include "videostf/rng.hpp"

namespace videostf::stress {

enum class TransformKind { Add, Delete, Replace, Reverse, Shuffle };

inline bool is_stochastic(TransformKind k) {
  return k != TransformKind::Reverse;
}

inline std::string kind_name(TransformKind k) {
  switch (k) {
    case TransformKind::Add: return "add";
    case TransformKind::Delete: return "delete";
    case TransformKind::Replace: return "replace";
    case TransformKind::Reverse: return "reverse";
    case TransformKind::Shuffle: return "shuffle";
  }
  return "add";
}

inline TransformKind kind_from_name(std::string_view name) {
  if (name == "add") return TransformKind::Add;
  if (name == "delete") return TransformKind::Delete;
  if (name == "replace") return TransformKind::Replace;
  if (name == "reverse") return TransformKind::Reverse;
  if (name == "shuffle") return TransformKind::Shuffle;
  throw ConfigError("unknown transform kind: " + std::string(name));
}

struct TransformSpec {
  TransformKind kind = TransformKind::Add;
  size_t k = 1;       // add/delete/replace only
  uint64_t seed = 0;  // stochastic kinds only
};

struct AddEdit {
  size_t source_index;    // frame position in the input sequence
  size_t insertion_slot;  // slot in the sequence as grown so far
};

struct ReplaceEdit {
  size_t target_index;
  size_t source_index;  // donor position, outside the target set
};

struct TransformPlan {
  TransformSpec spec;
  std::string video_id;
  size_t input_len = 0;       // T
  std::string input_digest;   // sequence digest the plan was built against
  size_t result_len = 0;      // T'

  std::vector<AddEdit> add_edits;          // Add
  std::vector<size_t> deleted_indices;     // Delete, ascending
  std::vector<ReplaceEdit> replace_edits;  // Replace, ascending by target
  std::vector<size_t> permutation;         // Shuffle: result[t] = input[perm[t]]

  nlohmann::json to_json() const {
    nlohmann::json edits;
    switch (spec.kind) {
      case TransformKind::Add:
        edits = nlohmann::json::array();
        for (const AddEdit& e : add_edits) {
          edits.push_back({{"source_index", e.source_index},
                           {"insertion_slot", e.insertion_slot}});
        }
        break;
      case TransformKind::Delete:
        edits = deleted_indices;
        break;
      case TransformKind::Replace:
        edits = nlohmann::json::array();
        for (const ReplaceEdit& e : replace_edits) {
          edits.push_back({{"target_index", e.target_index},
                           {"source_index", e.source_index}});
        }
        break;
      case TransformKind::Reverse:
        edits = nlohmann::json::array();
        break;
      case TransformKind::Shuffle:
        edits = permutation;
        break;
    }
    return nlohmann::json{{"kind", kind_name(spec.kind)},
                          {"k", spec.k},
                          {"seed", spec.seed},
                          {"video_id", video_id},
                          {"input_len", input_len},
                          {"input_digest", input_digest},
                          {"result_len", result_len},
                          {"edits", edits}};
  }

  // Byte-stable serialization (object keys sort lexicographically).
  std::string canonical() const { return to_json().dump(); }

  static TransformPlan from_json(const nlohmann::json& j) {
    TransformPlan plan;
    plan.spec.kind = kind_from_name(j.at("kind").get<std::string>());
    plan.spec.k = j.at("k").get<size_t>();
    plan.spec.seed = j.at("seed").get<uint64_t>();
    plan.video_id = j.at("video_id").get<std::string>();
    plan.input_len = j.at("input_len").get<size_t>();
    plan.input_digest = j.at("input_digest").get<std::string>();
    plan.result_len = j.at("result_len").get<size_t>();
    const nlohmann::json& edits = j.at("edits");
    switch (plan.spec.kind) {
      case TransformKind::Add:
        for (const auto& e : edits) {
          plan.add_edits.push_back(AddEdit{e.at("source_index").get<size_t>(),
                                           e.at("insertion_slot").get<size_t>()});
        }
        break;
      case TransformKind::Delete:
        plan.deleted_indices = edits.get<std::vector<size_t>>();
        break;
      case TransformKind::Replace:
        for (const auto& e : edits) {
          plan.replace_edits.push_back(
              ReplaceEdit{e.at("target_index").get<size_t>(),
                          e.at("source_index").get<size_t>()});
        }
        break;
      case TransformKind::Reverse:
        break;
      case TransformKind::Shuffle:
        plan.permutation = edits.get<std::vector<size_t>>();
        break;
    }
    return plan;
  }
};

namespace detail {

inline TransformPlan base_plan(const frames::FrameSequence& seq,
                               TransformKind kind, size_t k, uint64_t seed) {
  TransformPlan plan;
  plan.spec = TransformSpec{kind, k, seed};
  plan.video_id = seq.video_id;
  plan.input_len = seq.size();
  plan.input_digest = seq.sequence_digest();
  return plan;
}

}  // namespace detail

inline TransformPlan plan_add(const frames::FrameSequence& seq, size_t k,
                              uint64_t seed) {
  const size_t t = seq.size();
  if (k < 1 || k > t) {
    throw ValidationError("add: k must satisfy 1 <= k <= T (k=" +
                          std::to_string(k) + ", T=" + std::to_string(t) + ")");
  }
  TransformPlan plan = detail::base_plan(seq, TransformKind::Add, k, seed);
  rng::SplitMix64 gen(seed);
  const auto sources = rng::draw_distinct(gen, t, k);
  for (size_t j = 0; j < k; ++j) {
    const size_t slot = static_cast<size_t>(gen.bounded(t + j + 1));
    plan.add_edits.push_back(AddEdit{sources[j], slot});
  }
  plan.result_len = t + k;
  return plan;
}

inline TransformPlan plan_delete(const frames::FrameSequence& seq, size_t k,
                                 uint64_t seed) {
  const size_t t = seq.size();
  if (k < 1 || k >= t) {
    throw ValidationError("delete: k must satisfy 1 <= k <= T-1 (k=" +
                          std::to_string(k) + ", T=" + std::to_string(t) + ")");
  }
  TransformPlan plan = detail::base_plan(seq, TransformKind::Delete, k, seed);
  rng::SplitMix64 gen(seed);
  plan.deleted_indices = rng::draw_distinct(gen, t, k);
  std::sort(plan.deleted_indices.begin(), plan.deleted_indices.end());
  plan.result_len = t - k;
  return plan;
}

// One plan per frame position, deleting each frame exactly once; seed-free.
inline std::vector<TransformPlan> plan_delete_exhaustive(
    const frames::FrameSequence& seq) {
  const size_t t = seq.size();
  if (t < 2) {
    throw ValidationError("delete-exhaustive requires T >= 2");
  }
  std::vector<TransformPlan> plans;
  plans.reserve(t);
  for (size_t i = 0; i < t; ++i) {
    TransformPlan plan = detail::base_plan(seq, TransformKind::Delete, 1, 0);
    plan.deleted_indices = {i};
    plan.result_len = t - 1;
    plans.push_back(std::move(plan));
  }
  return plans;
}

inline TransformPlan plan_replace(const frames::FrameSequence& seq, size_t k,
                                  uint64_t seed) {
  const size_t t = seq.size();
  if (k < 1 || k >= t) {
    throw ValidationError("replace: k must satisfy 1 <= k <= T-1 (k=" +
                          std::to_string(k) + ", T=" + std::to_string(t) + ")");
  }
  TransformPlan plan = detail::base_plan(seq, TransformKind::Replace, k, seed);
  rng::SplitMix64 gen(seed);
  auto targets = rng::draw_distinct(gen, t, k);
  std::sort(targets.begin(), targets.end());
  std::vector<size_t> donor_pool;
  donor_pool.reserve(t - k);
  {
    size_t ti = 0;
    for (size_t i = 0; i < t; ++i) {
      if (ti < targets.size() && targets[ti] == i) {
        ++ti;
      } else {
        donor_pool.push_back(i);
      }
    }
  }
  for (size_t target : targets) {
    size_t donor = donor_pool[gen.bounded(donor_pool.size())];
    if (frames::same_identity(seq.frames[donor], seq.frames[target])) {
      // Duplicated frames (force-sampled short videos): the law that exactly
      // k positions change identity requires a donor that actually differs.
      std::vector<size_t> differing;
      for (size_t d : donor_pool) {
        if (!frames::same_identity(seq.frames[d], seq.frames[target])) {
          differing.push_back(d);
        }
      }
      if (differing.empty()) {
        throw ValidationError("replace: no donor with a distinct frame exists "
                              "for target " + std::to_string(target));
      }
      donor = differing[gen.bounded(differing.size())];
    }
    plan.replace_edits.push_back(ReplaceEdit{target, donor});
  }
  plan.result_len = t;
  return plan;
}

inline TransformPlan plan_reverse(const frames::FrameSequence& seq) {
  if (seq.size() < 1) {
    throw ValidationError("reverse requires T >= 1");
  }
  TransformPlan plan = detail::base_plan(seq, TransformKind::Reverse, 0, 0);
  plan.result_len = seq.size();
  return plan;
}

inline TransformPlan plan_shuffle(const frames::FrameSequence& seq,
                                  uint64_t seed) {
  const size_t t = seq.size();
  if (t < 2) {
    throw ValidationError("shuffle requires T >= 2 (no non-identity "
                          "permutation exists)");
  }
  TransformPlan plan = detail::base_plan(seq, TransformKind::Shuffle, 0, seed);
  rng::SplitMix64 gen(seed);
  for (;;) {
    auto perm = rng::permutation(gen, t);
    bool identity = true;
    for (size_t i = 0; i < t; ++i) {
      if (perm[i] != i) {
        identity = false;
        break;
      }
    }
    if (!identity) {
      plan.permutation = std::move(perm);
      break;
    }
  }
  plan.result_len = t;
  return plan;
}

// Deterministic materialization of an edit script. The plan must have been
// built for this exact sequence (video, length, and digest all checked).
inline frames::FrameSequence apply(const TransformPlan& plan,
                                   const frames::FrameSequence& seq) {
  if (plan.video_id != seq.video_id || plan.input_len != seq.size() ||
      plan.input_digest != seq.sequence_digest()) {
    throw PlanMismatchError(
        "plan built for " + plan.video_id + " (T=" +
        std::to_string(plan.input_len) + ", digest " + plan.input_digest +
        ") does not match sequence " + seq.video_id + " (T=" +
        std::to_string(seq.size()) + ", digest " + seq.sequence_digest() + ")");
  }
  frames::FrameSequence out;
  out.video_id = seq.video_id;
  switch (plan.spec.kind) {
    case TransformKind::Add: {
      out.frames = seq.frames;
      for (const AddEdit& e : plan.add_edits) {
        out.frames.insert(out.frames.begin() + static_cast<long>(e.insertion_slot),
                          seq.frames[e.source_index]);
      }
      break;
    }
    case TransformKind::Delete: {
      std::vector<bool> drop(seq.size(), false);
      for (size_t i : plan.deleted_indices) drop[i] = true;
      for (size_t i = 0; i < seq.size(); ++i) {
        if (!drop[i]) out.frames.push_back(seq.frames[i]);
      }
      break;
    }
    case TransformKind::Replace: {
      out.frames = seq.frames;
      for (const ReplaceEdit& e : plan.replace_edits) {
        out.frames[e.target_index] = seq.frames[e.source_index];
      }
      break;
    }
    case TransformKind::Reverse: {
      out.frames.assign(seq.frames.rbegin(), seq.frames.rend());
      break;
    }
    case TransformKind::Shuffle: {
      out.frames.reserve(seq.size());
      for (size_t i = 0; i < seq.size(); ++i) {
        out.frames.push_back(seq.frames[plan.permutation[i]]);
      }
      break;
    }
  }
  if (out.size() != plan.result_len) {
    throw PlanMismatchError("edit script produced length " +
                            std::to_string(out.size()) + ", plan promised " +
                            std::to_string(plan.result_len));
  }
  return out;
}

// A reproducible batch of plans with per-trial seeds split off a master seed:
// seed_i = split(master_seed, i).
inline std::vector<TransformPlan> trial_batch(const frames::FrameSequence& seq,
                                              TransformKind kind, size_t k,
                                              size_t trials,
                                              uint64_t master_seed) {
  if (trials < 1) {
    throw ValidationError("trial_batch requires trials >= 1");
  }
  if (!is_stochastic(kind)) {
    throw ValidationError("trial_batch is for stochastic transforms; "
                          "use plan_reverse for reverse");
  }
  std::vector<TransformPlan> plans;
  plans.reserve(trials);
  for (size_t i = 0; i < trials; ++i) {
    const uint64_t seed = rng::split(master_seed, static_cast<uint64_t>(i));
    switch (kind) {
      case TransformKind::Add:
        plans.push_back(plan_add(seq, k, seed));
        break;
      case TransformKind::Delete:
        plans.push_back(plan_delete(seq, k, seed));
        break;
      case TransformKind::Replace:
        plans.push_back(plan_replace(seq, k, seed));
        break;
      case TransformKind::Shuffle:
        plans.push_back(plan_shuffle(seq, seed));
        break;
      case TransformKind::Reverse:
        break;  // unreachable
    }
  }
  return plans;
}

}  // namespace videostf::stress
