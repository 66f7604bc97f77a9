#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "emgsnn/detect.hpp"
#include "emgsnn/snn.hpp"
#include "emgsnn/types.hpp"

// Error mapping: unwritable/unreadable paths raise IoError; a missing model or
// profile (pipeline state that another command produces) raises StateError, as
// do format/version mismatches.

namespace emgsnn {

// Shortest round-trip decimal form.
std::string format_double(double v);

std::string read_text(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_text(const std::filesystem::path& path, const std::string& content);

// Header `semg,v1,channels=<C>,rate=<hz>`, then one row per sample with C
// comma-separated values.
void write_signal(const std::filesystem::path& path, const SignalBuffer& signal);
SignalBuffer read_signal(const std::filesystem::path& path);

// Header `spikes,v1,channels=<C>,trains=<N>,steps=<T>`, then T rows of C*N
// '0'/'1' characters in channel-major order.
void write_spikes(const std::filesystem::path& path, const SpikeTensor& spikes);
SpikeTensor read_spikes(const std::filesystem::path& path);

// CSV with header `onset_sample,offset_sample,class_id`.
void write_labels(const std::filesystem::path& path, const std::vector<LabeledInterval>& labels);
std::vector<LabeledInterval> read_labels(const std::filesystem::path& path);

void write_profile(const std::filesystem::path& path, const CalibrationProfile& profile);
CalibrationProfile read_profile(const std::filesystem::path& path);

void write_model(const std::filesystem::path& path, const SnnModel& model);
SnnModel read_model(const std::filesystem::path& path);

std::string detection_report_json(const DetectionReport& report);
std::string energy_report_json(const EnergyReport& report, const EnergyModel& costs = {});

// Checkpoint/resume for a streaming detector.
std::string tad_state_json(const TadState& state);
TadState parse_tad_state(const std::string& text);

std::uint64_t fnv1a64(const std::string& bytes);
std::string file_hash_hex(const std::filesystem::path& path);

}  // namespace emgsnn
