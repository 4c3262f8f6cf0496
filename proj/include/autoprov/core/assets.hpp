#pragma once

#include <string_view>

// Bytes of the files under assets/, compiled into the library.
namespace autoprov::assets {

extern const std::string_view p1_log_summarization;
extern const std::string_view p2_entity_types;
extern const std::string_view p3_entity_extraction;
extern const std::string_view p4_edge_extraction;
extern const std::string_view p5_rule_generator;
extern const std::string_view p6_functional_label;
extern const std::string_view p7_flag_unknown;
extern const std::string_view p8_attack_summary;
extern const std::string_view p9_judge;
extern const std::string_view tactics_tsv;

}  // namespace autoprov::assets
