#pragma once

#include <doctest.h>

#include "sensing/error.hpp"
#include "sensing/ingestion.hpp"
#include "sensing/synthgen.hpp"

namespace testing {

inline sensing::ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const sensing::Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return sensing::ErrorKind::DomainError;
}

inline sensing::SyncedTrial synced(const sensing::synth::TrialData& d,
                                   const sensing::AlignOptions& options = {}) {
  return sensing::align(d.manifest, d.gaze, d.detections, d.telemetry, options);
}

inline sensing::SyncedTrial synced(const sensing::synth::ScenarioSpec& spec) {
  return synced(sensing::synth::generate_trial(spec).data);
}

}  // namespace testing
