#include "cprep/representation.hpp"

#include <sstream>
#include <stdexcept>

namespace cprep {

ReprConfig parse_repr_name(const std::string& name) {
  std::vector<std::string> tokens;
  std::string token;
  std::istringstream in(name);
  while (std::getline(in, token, '+')) tokens.push_back(token);
  if (tokens.empty()) throw std::invalid_argument("empty representation name");

  ReprConfig config;
  std::size_t first_flag = 1;
  if (tokens[0] == "CTL") {
    config.base = BaseRepresentation::Ctl;
  } else if (tokens[0] == "PCG") {
    config.base = BaseRepresentation::Pcg;
  } else {
    // No context block; all tokens are augmentation/reward tokens.
    config.base = BaseRepresentation::None;
    first_flag = 0;
  }

  bool reward_chosen = false;
  for (std::size_t i = first_flag; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (t == "LTL") {
      if (config.use_ltl) throw std::invalid_argument("duplicate LTL token in: " + name);
      config.use_ltl = true;
    } else if (t == "DTL") {
      if (config.use_dtl) throw std::invalid_argument("duplicate DTL token in: " + name);
      config.use_dtl = true;
    } else if (t == "RS") {
      if (reward_chosen) throw std::invalid_argument("conflicting reward tokens in: " + name);
      config.reward = RewardMode::RmShaped;
      reward_chosen = true;
    } else if (t == "RM") {
      if (reward_chosen) throw std::invalid_argument("conflicting reward tokens in: " + name);
      config.reward = RewardMode::RmRaw;
      reward_chosen = true;
    } else if (t == "C-PREP") {
      if (config.use_dtl) throw std::invalid_argument("duplicate DTL token in: " + name);
      if (reward_chosen) throw std::invalid_argument("conflicting reward tokens in: " + name);
      config.use_dtl = true;
      config.reward = RewardMode::RmShaped;
      reward_chosen = true;
    } else {
      throw std::invalid_argument("unknown representation token '" + t + "' in: " + name);
    }
  }
  return config;
}

std::string repr_name(const ReprConfig& config) {
  std::vector<std::string> tokens;
  if (config.base == BaseRepresentation::Ctl) tokens.emplace_back("CTL");
  if (config.base == BaseRepresentation::Pcg) tokens.emplace_back("PCG");
  if (config.use_ltl) tokens.emplace_back("LTL");
  if (config.use_dtl && config.reward == RewardMode::RmShaped) {
    tokens.emplace_back("C-PREP");
  } else {
    if (config.use_dtl) tokens.emplace_back("DTL");
    if (config.reward == RewardMode::RmShaped) tokens.emplace_back("RS");
    if (config.reward == RewardMode::RmRaw) tokens.emplace_back("RM");
  }
  if (tokens.empty()) {
    throw std::invalid_argument(
        "a configuration with no context block, no labels and the plain task reward has no name");
  }
  std::string name = tokens[0];
  for (std::size_t i = 1; i < tokens.size(); ++i) name += "+" + tokens[i];
  return name;
}

PcgEncoder::PcgEncoder(const std::vector<Context>& contexts) {
  for (const Context& context : contexts) {
    auto [it, inserted] = index_.emplace(context_key(context), capacity_);
    (void)it;
    if (inserted) ++capacity_;
  }
}

int PcgEncoder::index_of(const Context& context) const {
  auto it = index_.find(context_key(context));
  if (it == index_.end()) {
    throw std::invalid_argument("context was not registered with the one-hot encoder");
  }
  return it->second;
}

int vocabulary_size(const Cmdp& family) {
  if (family.env == EnvKind::OrderedNav) return family.entity_count;
  const int sectors = (family.base_map.height() / family.options.sector_rows) *
                      (family.base_map.width() / family.options.sector_cols);
  switch (family.env) {
    case EnvKind::GridNav: return sectors + 1;
    case EnvKind::MultiPoint: return sectors + family.entity_count;
    case EnvKind::PickupDropoff: return sectors + 2 * family.entity_count;
    case EnvKind::OrderedNav: break;
  }
  return 0;
}

int context_block_size(const Cmdp& family, const ReprConfig& config, const PcgEncoder* encoder) {
  if (config.base == BaseRepresentation::None) return 0;
  if (config.base == BaseRepresentation::Ctl) return raw_context_feature_size(family);
  if (encoder == nullptr) {
    throw std::invalid_argument("one-hot context encoding requires an encoder");
  }
  return encoder->capacity();
}

std::vector<double> context_block(const Cmdp& family, const ReprConfig& config,
                                  const PcgEncoder* encoder, const Context& context) {
  if (config.base == BaseRepresentation::None) return {};
  if (config.base == BaseRepresentation::Ctl) {
    return raw_context_features(family, context);
  }
  if (encoder == nullptr) {
    throw std::invalid_argument("one-hot context encoding requires an encoder");
  }
  std::vector<double> block(static_cast<std::size_t>(encoder->capacity()), 0.0);
  block[static_cast<std::size_t>(encoder->index_of(context))] = 1.0;
  return block;
}

int observation_size(const Cmdp& family, const ReprConfig& config, const PcgEncoder* encoder) {
  int size = state_feature_size(family) + context_block_size(family, config, encoder);
  if (config.use_ltl) size += vocabulary_size(family);
  if (config.use_dtl) size += vocabulary_size(family);
  return size;
}

void build_observation(const Cmdp& family, const ReprConfig& config, const TaskMdp& task,
                       const EnvState& state, const std::vector<double>& context_features,
                       const RmRunState& run, const Label* dtl, std::vector<double>& out) {
  out.clear();
  const std::vector<double> task_part = state_features(family, task, state);
  out.insert(out.end(), task_part.begin(), task_part.end());
  out.insert(out.end(), context_features.begin(), context_features.end());
  const int vocab = vocabulary_size(family);
  if (config.use_ltl) {
    if (run.last_label.width() != vocab) {
      throw std::invalid_argument("last label width disagrees with the family vocabulary");
    }
    for (int i = 0; i < vocab; ++i) out.push_back(run.last_label.test(i) ? 1.0 : 0.0);
  }
  if (config.use_dtl) {
    if (dtl == nullptr) {
      throw std::invalid_argument("desired-label block enabled but no label supplied");
    }
    if (dtl->width() != vocab) {
      throw std::invalid_argument("desired label width disagrees with the family vocabulary");
    }
    for (int i = 0; i < vocab; ++i) out.push_back(dtl->test(i) ? 1.0 : 0.0);
  }
}

double training_reward(const ReprConfig& config, double env_reward, const RewardMachine* rm,
                       const RmValueTable* table, int u_before, const Label& label) {
  switch (config.reward) {
    case RewardMode::Environment:
      return env_reward;
    case RewardMode::RmRaw: {
      if (rm == nullptr) throw std::invalid_argument("machine reward requested without a machine");
      return rm_step(*rm, u_before, label).reward;
    }
    case RewardMode::RmShaped: {
      if (rm == nullptr || table == nullptr) {
        throw std::invalid_argument("shaped reward requested without a machine and value table");
      }
      return shaped_reward(*rm, *table, u_before, label);
    }
  }
  return env_reward;
}

}  // namespace cprep
