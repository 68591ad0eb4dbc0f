#pragma once

#include <string>

#include "json.hpp"

#include "haarfactor/frequency.hpp"
#include "haarfactor/pipeline.hpp"

namespace haarfactor {

// Canonical key order everywhere: certificates must diff cleanly and byte-compare
// across reruns.
using Json = nlohmann::ordered_json;

Json to_json(const DyadicInterval& i);
Json to_json(const DyadicRectangle& r);
Json to_json(const IntervalCollection& c);
Json to_json(const RectangleCollection& c);
Json to_json(const DyadicRational& d);  // {"mantissa": "<decimal>", "exponent": e}
Json to_json(const Rational& r);        // "num/den" string
Json to_json(const HaarVector& v);
Json to_json(const HaarOperator& t);
Json to_json(const BlockBasisFamily& fam);
Json to_json(const LpcReport& rep);
Json to_json(const NormBracket& nb, bool with_witness = false);
Json to_json(const LevelSelection& sel);
Json to_json(const DiagCertificate& cert);
Json to_json(const RamseyResult& r);
Json to_json(const FactorizationResult& fr);
Json to_json(const ReiteratedBasis& rb);
Json to_json(const GlueResult& g);

DyadicInterval interval_from_json(const Json& j);
DyadicRectangle rectangle_from_json(const Json& j);
IntervalCollection interval_collection_from_json(const Json& j);
RectangleCollection rectangle_collection_from_json(const Json& j);
HaarVector haar_vector_from_json(const Json& j);
HaarOperator haar_operator_from_json(const Json& j);
BlockBasisFamily block_basis_family_from_json(const Json& j);
OuterTensorFamily outer_tensor_family_from_json(const Json& j);
FrequencyContext frequency_context_from_json(const Json& j);
GeneralizedBasis generalized_basis_from_json(const Json& j);
RectColoring rect_coloring_from_json(const Json& j);
SumSpaceOperator sum_space_operator_from_json(const Json& j);
std::vector<IndexedComponent> indexed_components_from_json(const Json& j);

Json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Canonical serialization (2-space indent, trailing newline).
std::string canonical_dump(const Json& j);

}  // namespace haarfactor
