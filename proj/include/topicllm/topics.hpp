#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace topicllm {

/// A concise label paired with a one-sentence description. `count` is the
/// number of times generation produced the topic.
struct Topic {
  int level = 1;
  std::string label;
  std::string description;
  std::size_t count = 0;

  friend bool operator==(const Topic&, const Topic&) = default;
};

/// Ordered topics with case-insensitively unique labels per level. Seed topics
/// are kept ahead of generated ones.
class TopicList {
 public:
  TopicList() = default;

  /// Seeds go first; throws DataError on a duplicate label.
  void add_seed(Topic topic);
  /// Appends; throws DataError on a duplicate label or empty description.
  void add(Topic topic);

  Topic* find(std::string_view label, int level);
  const Topic* find(std::string_view label, int level) const;
  /// Any level.
  const Topic* find_any(std::string_view label) const;

  bool is_seed(std::string_view label) const;

  const std::vector<Topic>& topics() const noexcept { return topics_; }
  std::vector<Topic>& mutable_topics() noexcept { return topics_; }
  std::size_t size() const noexcept { return topics_.size(); }
  bool empty() const noexcept { return topics_.empty(); }
  std::size_t seed_count() const noexcept { return seed_labels_.size(); }
  const std::vector<std::string>& seed_labels() const noexcept {
    return seed_labels_;
  }
  void set_seed_labels(std::vector<std::string> labels) {
    seed_labels_ = std::move(labels);
  }

  std::size_t total_count() const;

  auto begin() const noexcept { return topics_.begin(); }
  auto end() const noexcept { return topics_.end(); }

 private:
  void check_new(const Topic& topic) const;

  std::vector<Topic> topics_;
  std::vector<std::string> seed_labels_;
};

/// "[<level>] <Label>: <Description>"
std::string format_topic(const Topic& topic);
/// "[<level>] <Label> (Count: <n>): <Description>"
std::string format_topic_with_count(const Topic& topic);

/// One rendered line per topic, in list order.
std::string render_topic_lines(const TopicList& topics);

/// Parses a topic-file line in either format above. Returns nullopt for
/// lines that do not match.
std::optional<Topic> parse_topic_line(std::string_view line);

/// Topic file: one topic per line; blank lines and lines starting with '#'
/// are ignored. With `as_seeds` every topic is marked as a seed. Throws
/// DataError with the line number on malformed content or duplicates.
TopicList read_topic_file(const std::filesystem::path& path,
                          bool as_seeds = false);
TopicList parse_topic_file(std::istream& in, const std::string& source,
                           bool as_seeds = false);
void write_topic_file(const TopicList& topics, std::ostream& out);
void write_topic_file(const TopicList& topics,
                      const std::filesystem::path& path);

/// The two seeds used by the default generation prompt.
TopicList default_seed_topics();

}  // namespace topicllm
