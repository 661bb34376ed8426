#include "topicllm/topics.hpp"

#include <fstream>
#include <numeric>
#include <regex>

#include "topicllm/errors.hpp"
#include "topicllm/text.hpp"

namespace topicllm {

void TopicList::check_new(const Topic& topic) const {
  if (text::trim(topic.label).empty()) {
    throw DataError("topic label must not be empty");
  }
  if (topic.label.find(':') != std::string::npos) {
    throw DataError("topic label \"" + topic.label + "\" contains a colon");
  }
  if (text::trim(topic.description).empty()) {
    throw DataError("topic \"" + topic.label + "\" has no description");
  }
  if (topic.level < 1) {
    throw DataError("topic \"" + topic.label + "\" has level < 1");
  }
  if (find(topic.label, topic.level) != nullptr) {
    throw DataError("duplicate topic label \"" + topic.label + "\"");
  }
}

void TopicList::add_seed(Topic topic) {
  check_new(topic);
  const auto pos = static_cast<std::ptrdiff_t>(seed_labels_.size());
  seed_labels_.push_back(topic.label);
  topics_.insert(topics_.begin() + pos, std::move(topic));
}

void TopicList::add(Topic topic) {
  check_new(topic);
  topics_.push_back(std::move(topic));
}

Topic* TopicList::find(std::string_view label, int level) {
  for (auto& t : topics_) {
    if (t.level == level && text::iequals(t.label, label)) return &t;
  }
  return nullptr;
}

const Topic* TopicList::find(std::string_view label, int level) const {
  return const_cast<TopicList*>(this)->find(label, level);
}

const Topic* TopicList::find_any(std::string_view label) const {
  for (const auto& t : topics_) {
    if (text::iequals(t.label, label)) return &t;
  }
  return nullptr;
}

bool TopicList::is_seed(std::string_view label) const {
  for (const auto& s : seed_labels_) {
    if (text::iequals(s, label)) return true;
  }
  return false;
}

std::size_t TopicList::total_count() const {
  return std::accumulate(topics_.begin(), topics_.end(), std::size_t{0},
                         [](std::size_t acc, const Topic& t) {
                           return acc + t.count;
                         });
}

std::string format_topic(const Topic& topic) {
  return "[" + std::to_string(topic.level) + "] " + topic.label + ": " +
         topic.description;
}

std::string format_topic_with_count(const Topic& topic) {
  return "[" + std::to_string(topic.level) + "] " + topic.label +
         " (Count: " + std::to_string(topic.count) + "): " + topic.description;
}

std::string render_topic_lines(const TopicList& topics) {
  std::string out;
  for (const auto& t : topics) {
    if (!out.empty()) out += '\n';
    out += format_topic(t);
  }
  return out;
}

std::optional<Topic> parse_topic_line(std::string_view line) {
  static const std::regex kLine(
      R"(^\s*\[(\d+)\]\s*([^:\n]+?)\s*(?:\(Count:\s*(\d+)\))?\s*:\s*(.*?)\s*$)");
  std::string s(line);
  std::smatch m;
  if (!std::regex_match(s, m, kLine)) return std::nullopt;
  Topic t;
  t.level = std::stoi(m[1].str());
  std::string label(text::trim(m[2].str()));
  while (!label.empty() && label.front() == '*') label.erase(0, 1);
  while (!label.empty() && label.back() == '*') label.pop_back();
  t.label = std::string(text::trim(label));
  t.description = m[4].str();
  if (m[3].matched) t.count = std::stoull(m[3].str());
  if (t.label.empty() || t.description.empty()) return std::nullopt;
  return t;
}

TopicList parse_topic_file(std::istream& in, const std::string& source,
                           bool as_seeds) {
  TopicList list;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    auto topic = parse_topic_line(line);
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (!topic) {
      throw DataError(where + "expected \"[<level>] <Label>: <Description>\"");
    }
    try {
      if (as_seeds) {
        list.add_seed(std::move(*topic));
      } else {
        list.add(std::move(*topic));
      }
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return list;
}

TopicList read_topic_file(const std::filesystem::path& path, bool as_seeds) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open topic file " + path.string());
  return parse_topic_file(in, path.string(), as_seeds);
}

void write_topic_file(const TopicList& topics, std::ostream& out) {
  for (const auto& t : topics) out << format_topic_with_count(t) << '\n';
}

void write_topic_file(const TopicList& topics,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_topic_file(topics, out);
}

TopicList default_seed_topics() {
  TopicList seeds;
  seeds.add_seed({1, "Trade", "Mentions the exchange of capital, goods, and services.", 0});
  seeds.add_seed({1, "Agriculture", "Mentions policies relating to agricultural practices and products.", 0});
  return seeds;
}

}  // namespace topicllm
