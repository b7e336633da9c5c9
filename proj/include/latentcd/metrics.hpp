#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace latentcd {

// Shortest round-trip decimal form, locale independent (std::to_chars).
std::string format_double(double v);

// Buffered CSV with a fixed header; content is written atomically (temp file
// + rename) when close() runs. Row width is checked against the header.
class CsvWriter {
public:
    CsvWriter(std::filesystem::path path, std::vector<std::string> header);
    ~CsvWriter();

    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::filesystem::path path_;
    std::string buf_;
    std::size_t cols_ = 0;
    bool closed_ = false;
};

void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace latentcd
