#include "droneplan/structure.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace droneplan {

Coalition Coalition::all(std::size_t n) {
  if (n >= 64) {
    throw std::invalid_argument("at most 63 shippers are supported");
  }
  return Coalition{(std::uint64_t{1} << n) - 1};
}

std::size_t Coalition::size() const { return static_cast<std::size_t>(std::popcount(mask)); }

std::vector<std::size_t> Coalition::members() const {
  std::vector<std::size_t> out;
  for (std::uint64_t m = mask; m != 0; m &= m - 1) {
    out.push_back(static_cast<std::size_t>(std::countr_zero(m)));
  }
  return out;
}

bool canonical_less(Coalition a, Coalition b) {
  if (a.size() != b.size()) {
    return a.size() > b.size();
  }
  return a.members() < b.members();
}

CoalitionStructure CoalitionStructure::from_blocks(std::vector<Coalition> blocks) {
  std::sort(blocks.begin(), blocks.end(), canonical_less);
  return CoalitionStructure{std::move(blocks)};
}

CoalitionStructure CoalitionStructure::singletons(std::size_t n) {
  std::vector<Coalition> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    blocks.push_back(Coalition::single(i));
  }
  return from_blocks(std::move(blocks));
}

Coalition CoalitionStructure::block_of(std::size_t shipper) const {
  for (auto b : blocks) {
    if (b.contains(shipper)) {
      return b;
    }
  }
  throw std::out_of_range("shipper not covered by structure");
}

bool structure_less(const CoalitionStructure& a, const CoalitionStructure& b) {
  if (a.blocks.size() != b.blocks.size()) {
    return a.blocks.size() > b.blocks.size();
  }
  // Same block count: more even block sizes first, so 2+2 precedes 3+1.
  for (std::size_t k = 0; k < a.blocks.size(); ++k) {
    if (a.blocks[k].size() != b.blocks[k].size()) {
      return a.blocks[k].size() < b.blocks[k].size();
    }
  }
  return std::lexicographical_compare(a.blocks.begin(), a.blocks.end(), b.blocks.begin(),
                                      b.blocks.end(), canonical_less);
}

bool is_partition(const CoalitionStructure& s, std::size_t n) {
  std::uint64_t seen = 0;
  for (auto b : s.blocks) {
    if (b.empty() || (seen & b.mask) != 0) {
      return false;
    }
    seen |= b.mask;
  }
  return Coalition{seen} == Coalition::all(n);
}

std::uint64_t bell_number(std::size_t n) {
  // Bell triangle.
  std::vector<std::uint64_t> row{1};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto v : row) {
      next.push_back(next.back() + v);
    }
    row = std::move(next);
  }
  return row.front();
}

std::vector<CoalitionStructure> enumerate_structures(std::size_t n) {
  std::vector<CoalitionStructure> out;
  if (n == 0) {
    out.push_back(CoalitionStructure{});
    return out;
  }
  // Restricted growth strings: label[0] = 0, label[i] <= 1 + max(label[0..i)).
  std::vector<std::size_t> label(n, 0);
  std::vector<std::size_t> prefix_max(n, 0);
  while (true) {
    std::vector<Coalition> blocks(prefix_max.back() + 1);
    for (std::size_t i = 0; i < n; ++i) {
      blocks[label[i]] = blocks[label[i]].with(i);
    }
    out.push_back(CoalitionStructure::from_blocks(std::move(blocks)));

    std::size_t i = n - 1;
    while (i > 0 && label[i] == prefix_max[i - 1] + 1) {
      --i;
    }
    if (i == 0) {
      break;
    }
    ++label[i];
    prefix_max[i] = std::max(prefix_max[i - 1], label[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      label[j] = 0;
      prefix_max[j] = prefix_max[i];
    }
  }
  std::sort(out.begin(), out.end(), structure_less);
  return out;
}

namespace {

std::vector<CoalitionStructure> moves_of(const CoalitionStructure& s, std::size_t shipper) {
  std::vector<CoalitionStructure> out;
  const Coalition own = s.block_of(shipper);
  auto rebuild = [&](Coalition target) {
    std::vector<Coalition> blocks;
    for (auto b : s.blocks) {
      if (b == own) {
        if (b.size() > 1) {
          blocks.push_back(b.without(shipper));
        }
      } else if (b == target) {
        blocks.push_back(b.with(shipper));
      } else {
        blocks.push_back(b);
      }
    }
    if (target.empty()) {
      blocks.push_back(Coalition::single(shipper));
    }
    return CoalitionStructure::from_blocks(std::move(blocks));
  };
  for (auto b : s.blocks) {
    if (b != own) {
      out.push_back(rebuild(b));
    }
  }
  if (own.size() > 1) {
    out.push_back(rebuild(Coalition{}));
  }
  return out;
}

}  // namespace

std::vector<CoalitionStructure> neighbors(const CoalitionStructure& s, std::size_t n) {
  std::vector<CoalitionStructure> out;
  for (std::size_t p = 0; p < n; ++p) {
    for (auto& m : moves_of(s, p)) {
      out.push_back(std::move(m));
    }
  }
  std::sort(out.begin(), out.end(), structure_less);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Coalition changed_shippers(const CoalitionStructure& from, const CoalitionStructure& to,
                           std::size_t n) {
  Coalition out;
  for (std::size_t p = 0; p < n; ++p) {
    if (from.block_of(p) != to.block_of(p)) {
      out = out.with(p);
    }
  }
  return out;
}

std::vector<std::size_t> movers(const CoalitionStructure& from, const CoalitionStructure& to,
                                std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < n; ++p) {
    for (const auto& m : moves_of(from, p)) {
      if (m == to) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

std::string format_coalition(Coalition c, const std::vector<std::string>& ids) {
  std::string out;
  for (auto m : c.members()) {
    if (!out.empty()) {
      out += ',';
    }
    out += ids.at(m);
  }
  return out;
}

std::string format_structure(const CoalitionStructure& s, const std::vector<std::string>& ids) {
  std::string out;
  for (auto b : s.blocks) {
    if (!out.empty()) {
      out += '|';
    }
    out += format_coalition(b, ids);
  }
  return out;
}

namespace {

std::string_view trim(std::string_view v) {
  while (!v.empty() && (v.front() == ' ' || v.front() == '\t')) v.remove_prefix(1);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.remove_suffix(1);
  return v;
}

}  // namespace

Coalition parse_coalition(std::string_view text, const std::vector<std::string>& ids) {
  Coalition out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    auto token = trim(text.substr(start, end - start));
    if (token.empty()) {
      throw std::invalid_argument("empty shipper id in '" + std::string(text) + "'");
    }
    auto it = std::find(ids.begin(), ids.end(), token);
    if (it == ids.end()) {
      throw std::invalid_argument("unknown shipper '" + std::string(token) + "'");
    }
    const auto index = static_cast<std::size_t>(it - ids.begin());
    if (out.contains(index)) {
      throw std::invalid_argument("shipper '" + std::string(token) + "' listed twice");
    }
    out = out.with(index);
    start = end + 1;
  }
  return out;
}

CoalitionStructure parse_structure(std::string_view text, const std::vector<std::string>& ids) {
  std::vector<Coalition> blocks;
  std::uint64_t seen = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('|', start);
    if (end == std::string_view::npos) end = text.size();
    auto block = parse_coalition(text.substr(start, end - start), ids);
    if ((seen & block.mask) != 0) {
      throw std::invalid_argument("shipper appears in two coalitions");
    }
    seen |= block.mask;
    blocks.push_back(block);
    start = end + 1;
  }
  return CoalitionStructure::from_blocks(std::move(blocks));
}

}  // namespace droneplan
