// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

#include <json.hpp>

#include "falcon/analog.hpp"
#include "falcon/channel.hpp"
#include "falcon/falcon.hpp"
#include "falcon/rates.hpp"

// Complex numbers are written as [re, im] pairs, complex vectors as lists of pairs
// and matrices row-major as lists of rows.
namespace falcon {

using Json = nlohmann::json;

Json to_json(const CVector& v);
Json to_json(const CMatrix& m);
CVector cvector_from_json(const Json& j);
CMatrix cmatrix_from_json(const Json& j);

Json to_json(const ChannelSet& channels);
ChannelSet channel_set_from_json(const Json& j);

Json to_json(const AnalogPrecoder& analog);
AnalogPrecoder analog_from_json(const Json& j);

Json to_json(const std::vector<Slack>& slacks);
Json to_json(const RateReport& report);
Json to_json(const RsSolution& sol);

/// Two-column CSV "iteration,wsr" with iterations counted from 1.
void write_trace_csv(std::ostream& os, const std::vector<double>& trace);

}  // namespace falcon
