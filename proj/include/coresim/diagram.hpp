// coresim -- trace rendering: ASCII timing diagrams and CSV export

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "coresim/sim.hpp"

namespace coresim {

// One row per uop, one glyph per cycle:
//   .  dispatched, waiting to issue
//   1..9,+  executing (stage number; + past stage 9)
//   =  completed, waiting to retire
//   R  retired that cycle
//   x  squashed that cycle
// Rows wrap into pages of at most `width` columns. Throws on empty traces.
std::string render_diagram(const Trace& trace, uint32_t width = 120);

// Columns: seq,op,dispatch,issue,complete,retire,squash,transient.
// Absent values print as empty fields.
void write_trace_csv(std::ostream& os, const Trace& trace);

} // namespace coresim
