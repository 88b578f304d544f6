#pragma once
#include <string>

#include "dlab/verify.h"

namespace dlab {

// write content to path via a sibling temp file and rename, so readers never
// observe a half-written report
void atomic_write(const std::string& path, const std::string& content);

// RFC-4180 (CRLF rows, '.' decimal, UTF-8), columns t,lhs,envelope at full
// double precision; byte-stable for identical reports
std::string report_csv(const EstimateReport& rep);

// JSON sidecar: parameters, fitted exponent, verdict, and the build id
std::string report_sidecar(const EstimateReport& rep);

// dir/stem.csv + dir/stem.json (directories created as needed)
void write_report(const std::string& dir, const std::string& stem, const EstimateReport& rep);

}  // namespace dlab
