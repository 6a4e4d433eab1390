#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "openqs/linalg.hpp"
#include "openqs/open_quantum.hpp"
#include "openqs/stochastic_processes.hpp"

namespace openqs {

using json = nlohmann::json;

// {dim, re: [[...]], im: [[...]]}; doubles are written with round-trip precision.
json to_json(const Mat& a);
Mat operator_from_json(const json& j);

json to_json(const SuperOperator& s);  // matrix in the ket-bra basis

// {type: "rtn", w, p} | {type: "asym", w_plus, w_minus, p} | {type: "gauss-sum", w, n}
json to_json(const ProcessSpec& s);
ProcessSpec process_from_json(const json& j);

// {hs, he, v, f, lambda, rhoE} with rhoE an operator or {thermal: beta}.
// Several couplings: v and f are arrays of operators.
json to_json(const SEModel& m);
SEModel model_from_json(const json& j);
SEModel load_model(const std::string& path);

void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

}  // namespace openqs
