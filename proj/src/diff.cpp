#include <string>
#include <string_view>
#include <vector>

#include "dsagent/prompts.hpp"

namespace dsagent::prompts {

namespace {

// Lines keep their terminating '\n' so a missing final newline counts as a change.
std::vector<std::string_view> split_keep_newline(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        end = end == std::string_view::npos ? text.size() : end + 1;
        lines.push_back(text.substr(pos, end - pos));
        pos = end;
    }
    return lines;
}

enum class Op { keep, remove, insert };

struct Edit {
    Op op;
    std::size_t a;  // index into old lines (keep/remove)
    std::size_t b;  // index into new lines (keep/insert)
};

// Myers' O((N+M)D) shortest edit script.
std::vector<Edit> shortest_edit(const std::vector<std::string_view>& a, const std::vector<std::string_view>& b) {
    const long n = static_cast<long>(a.size());
    const long m = static_cast<long>(b.size());
    const long max = n + m;
    const long offset = max + 1;
    std::vector<long> v(static_cast<std::size_t>(2 * max + 3), 0);
    std::vector<std::vector<long>> history;
    long found_d = -1;
    for (long d = 0; d <= max && found_d < 0; ++d) {
        for (long k = -d; k <= d; k += 2) {
            long x;
            if (k == -d || (k != d && v[offset + k - 1] < v[offset + k + 1]))
                x = v[offset + k + 1];
            else
                x = v[offset + k - 1] + 1;
            long y = x - k;
            while (x < n && y < m && a[x] == b[y]) {
                ++x;
                ++y;
            }
            v[offset + k] = x;
            if (x >= n && y >= m) {
                found_d = d;
                break;
            }
        }
        history.push_back(v);
    }

    std::vector<Edit> edits;
    long x = n, y = m;
    for (long d = found_d; d > 0; --d) {
        const auto& prev = history[static_cast<std::size_t>(d - 1)];
        const long k = x - y;
        long prev_k;
        if (k == -d || (k != d && prev[offset + k - 1] < prev[offset + k + 1]))
            prev_k = k + 1;
        else
            prev_k = k - 1;
        const long prev_x = prev[offset + prev_k];
        const long prev_y = prev_x - prev_k;
        while (x > prev_x && y > prev_y) {
            --x;
            --y;
            edits.push_back({Op::keep, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
        }
        if (x == prev_x) {
            --y;
            edits.push_back({Op::insert, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
        } else {
            --x;
            edits.push_back({Op::remove, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
        }
    }
    while (x > 0 && y > 0) {
        --x;
        --y;
        edits.push_back({Op::keep, static_cast<std::size_t>(x), static_cast<std::size_t>(y)});
    }
    return {edits.rbegin(), edits.rend()};
}

std::string range(std::size_t start, std::size_t count) {
    // GNU convention: an empty range names the line before it.
    if (count == 0) return std::to_string(start) + ",0";
    if (count == 1) return std::to_string(start + 1);
    return std::to_string(start + 1) + "," + std::to_string(count);
}

void emit_line(std::string& out, char tag, std::string_view line) {
    out += tag;
    if (!line.empty() && line.back() == '\n') {
        out.append(line);
    } else {
        out.append(line);
        out += "\n\\ No newline at end of file\n";
    }
}

}  // namespace

std::string code_diff(std::string_view old_script, std::string_view new_script) {
    if (old_script == new_script) return {};
    const auto a = split_keep_newline(old_script);
    const auto b = split_keep_newline(new_script);
    const auto edits = shortest_edit(a, b);
    constexpr std::size_t context = 3;

    std::string out = "--- a/train.py\n+++ b/train.py\n";
    std::size_t i = 0;
    while (i < edits.size()) {
        if (edits[i].op == Op::keep) {
            ++i;
            continue;
        }
        // Hunk spans from `context` keeps before the first change to `context` keeps after
        // the last change, merging changes separated by at most 2*context keeps.
        std::size_t start = i >= context ? i - context : 0;
        while (start < i && edits[start].op != Op::keep) ++start;
        std::size_t end = i;
        std::size_t last_change = i;
        while (end < edits.size()) {
            if (edits[end].op != Op::keep) {
                last_change = end;
                ++end;
                continue;
            }
            std::size_t run = end;
            while (run < edits.size() && edits[run].op == Op::keep) ++run;
            if (run == edits.size() || run - end > 2 * context) break;
            end = run;
        }
        end = std::min(edits.size(), last_change + 1 + context);

        std::size_t old_start = edits[start].a, new_start = edits[start].b;
        std::size_t old_count = 0, new_count = 0;
        for (std::size_t j = start; j < end; ++j) {
            if (edits[j].op != Op::insert) ++old_count;
            if (edits[j].op != Op::remove) ++new_count;
        }
        out += "@@ -" + range(old_start, old_count) + " +" + range(new_start, new_count) + " @@\n";
        for (std::size_t j = start; j < end; ++j) {
            switch (edits[j].op) {
                case Op::keep: emit_line(out, ' ', a[edits[j].a]); break;
                case Op::remove: emit_line(out, '-', a[edits[j].a]); break;
                case Op::insert: emit_line(out, '+', b[edits[j].b]); break;
            }
        }
        i = end;
    }
    return out;
}

}  // namespace dsagent::prompts
