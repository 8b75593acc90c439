#include "coresim/diagram.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

namespace coresim {

namespace {

// glyph for one uop at one cycle, or ' ' outside its lifetime
char glyph_at(const UopRecord& r, uint64_t cycle) {
    if (r.squash_cycle && cycle == *r.squash_cycle) return 'x';
    if (r.squash_cycle && cycle > *r.squash_cycle) return ' ';
    if (cycle < r.dispatch_cycle) return ' ';
    if (r.retire_cycle && cycle == *r.retire_cycle) return 'R';
    if (r.retire_cycle && cycle > *r.retire_cycle) return ' ';
    if (r.issue_cycle && cycle >= *r.issue_cycle) {
        if (r.complete_cycle && cycle >= *r.complete_cycle) return '=';
        // executing: find the stage whose entry span covers this cycle
        size_t stage = 0;
        for (size_t i = 0; i < r.stage_entry_cycles.size(); i++)
            if (cycle >= r.stage_entry_cycles[i]) stage = i;
        return stage < 9 ? static_cast<char>('1' + stage) : '+';
    }
    return '.';
}

uint64_t last_cycle_of(const UopRecord& r) {
    if (r.squash_cycle) return *r.squash_cycle;
    if (r.retire_cycle) return *r.retire_cycle;
    if (r.complete_cycle) return *r.complete_cycle;
    if (r.issue_cycle) return *r.issue_cycle;
    return r.dispatch_cycle;
}

} // namespace

std::string render_diagram(const Trace& trace, uint32_t width) {
    if (trace.records.empty()) throw ValidationError("cannot render an empty trace");
    if (width < 32) width = 32;

    uint64_t end = 0;
    for (const auto& r : trace.records) end = std::max(end, last_cycle_of(r));

    const int label_width = 14;
    const uint64_t cycles_per_page = width - label_width;

    std::ostringstream os;
    os << "legend: .=waiting 1..9,+=executing(stage) ==done R=retire x=squash\n";
    for (uint64_t page_start = 0; page_start <= end; page_start += cycles_per_page) {
        uint64_t page_end = std::min(end, page_start + cycles_per_page - 1);
        os << "cycles " << page_start << ".." << page_end << "\n";
        for (const auto& r : trace.records) {
            if (last_cycle_of(r) < page_start || r.dispatch_cycle > page_end) continue;
            std::ostringstream label;
            label << r.seq << ":" << to_string(r.op);
            std::string l = label.str();
            if (l.size() > static_cast<size_t>(label_width - 2)) l.resize(label_width - 2);
            os << l << std::string(label_width - l.size(), ' ');
            for (uint64_t c = page_start; c <= page_end; c++) os << glyph_at(r, c);
            os << "\n";
        }
    }
    return os.str();
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
    auto cell = [&os](const std::optional<uint64_t>& v) {
        if (v) os << *v;
    };
    os << "seq,op,dispatch,issue,complete,retire,squash,transient\n";
    for (const auto& r : trace.records) {
        os << r.seq << ',' << to_string(r.op) << ',' << r.dispatch_cycle << ',';
        cell(r.issue_cycle);
        os << ',';
        cell(r.complete_cycle);
        os << ',';
        cell(r.retire_cycle);
        os << ',';
        cell(r.squash_cycle);
        os << ',' << (r.transient ? 1 : 0) << "\n";
    }
}

} // namespace coresim
