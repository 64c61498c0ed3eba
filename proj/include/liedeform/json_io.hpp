#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "liedeform/algebra.hpp"
#include "liedeform/config.hpp"
#include "liedeform/group.hpp"
#include "liedeform/net.hpp"
#include "liedeform/nielsen.hpp"
#include "liedeform/relations.hpp"
#include "liedeform/torsion.hpp"
#include "liedeform/walk.hpp"
#include "liedeform/words.hpp"

namespace liedeform {

using nlohmann::json;

json spec_to_json(const GroupSpec& spec);
// Returned reference is owned by an internal cache so GroupElement spec
// pointers stay valid for the process lifetime.
const GroupSpec* spec_from_json(const json& j);

json element_to_json(const GroupElement& g);
GroupElement element_from_json(const json& j, const GroupSpec* spec,
                               const Thresholds& thr = {});

// Tuple file: {"spec": {...}, "elements": [entries, ...]}.
json tuple_to_json(const std::vector<GroupElement>& tuple);
std::vector<GroupElement> tuple_from_json(const json& j,
                                          const Thresholds& thr = {});

json word_to_json(const Word& w);
Word word_from_json(const json& j, int rank);

json thresholds_to_json(const Thresholds& t);
Thresholds thresholds_from_json(const json& j);
json budgets_to_json(const Budgets& b);
Budgets budgets_from_json(const json& j);

json certificate_to_json(const DensityCertificate& c);
json net_to_json(const NetTable& net);
NetTable net_from_json(const json& j, const Thresholds& thr = {});
json move_to_json(const Move& m);
Move move_from_json(const json& j, int rank);
json move_certificate_to_json(const MoveCertificate& c);
MoveCertificate move_certificate_from_json(const json& j,
                                           const Thresholds& thr = {});
json fa_witness_to_json(const FAWitness& w);
json z2_result_to_json(const Z2Result& r);
json walk_stats_to_json(const WalkStats& s);
json relation_scan_to_json(const RelationScan& s);
json pair_relation_scan_to_json(const PairRelationScan& s);

// Full record of one CLI run, sufficient to reproduce it.
struct ExperimentManifest {
    std::string command;
    std::string version;
    json config;                                // thresholds + budgets
    json arguments;                             // resolved flag values
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_digests;   // path -> fnv64 hex
    std::map<std::string, std::string> output_digests;  // path -> fnv64 hex
};

json manifest_to_json(const ExperimentManifest& m);
ExperimentManifest manifest_from_json(const json& j);

std::uint64_t fnv1a64(const std::string& bytes);
std::string digest_hex(const std::string& bytes);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
json load_json_file(const std::string& path);
// Serializes with a fixed layout (2-space indent) so digests are stable.
std::string dump_canonical(const json& j);
void write_json_file(const std::string& path, const json& j);

}  // namespace liedeform
