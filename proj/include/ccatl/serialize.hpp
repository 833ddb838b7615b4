#pragma once

#include <iosfwd>
#include <string>

#include "ccatl/cca.hpp"
#include "ccatl/dcca.hpp"

namespace ccatl {

// Plain-text model files. Numbers use the shortest round-trip form, so a save/load cycle
// is bit-exact.
void write_model(std::ostream& out, const CcaModel& m);
void write_model(std::ostream& out, const KccaModel& m);
void write_model(std::ostream& out, const DccaModel& m);

// Reads the model type recorded in the header; throws InputError on a mismatch.
CcaModel read_cca_model(std::istream& in);
KccaModel read_kcca_model(std::istream& in);
DccaModel read_dcca_model(std::istream& in);

// The type tag of a model file ("linear_cca", "kernel_cca", "deep_cca").
std::string peek_model_type(std::istream& in);

}  // namespace ccatl
