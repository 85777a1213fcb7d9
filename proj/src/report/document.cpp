#include "tabml/common.hpp"
#include "tabml/report.hpp"

namespace tabml::report {

void Document::heading(int level, std::string text) {
  Block b;
  b.kind = Block::Kind::heading;
  b.level = level;
  b.text = std::move(text);
  blocks.push_back(std::move(b));
}

void Document::paragraph(std::string text) {
  Block b;
  b.kind = Block::Kind::paragraph;
  b.text = std::move(text);
  blocks.push_back(std::move(b));
}

void Document::banner(std::string text) {
  Block b;
  b.kind = Block::Kind::banner;
  b.text = std::move(text);
  blocks.push_back(std::move(b));
}

void Document::image(std::string path, std::string caption) {
  Block b;
  b.kind = Block::Kind::image;
  b.text = std::move(caption);
  b.header = {std::move(path)};
  blocks.push_back(std::move(b));
}

void Document::table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows) {
  Block b;
  b.kind = Block::Kind::table;
  b.header = std::move(header);
  b.rows = std::move(rows);
  blocks.push_back(std::move(b));
}

namespace {

std::string md_cell(const std::string& text) {
  std::string out;
  for (char ch : text) {
    if (ch == '|') out += "\\|";
    else if (ch == '\n') out += ' ';
    else out += ch;
  }
  return out;
}

std::string html_escape(std::string_view text) {
  std::string out;
  for (char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string to_markdown(const Document& doc) {
  std::string out = "# " + doc.title + "\n";
  for (const auto& b : doc.blocks) {
    out += "\n";
    switch (b.kind) {
      case Block::Kind::heading: out += std::string(static_cast<std::size_t>(b.level), '#') + " " + b.text + "\n"; break;
      case Block::Kind::paragraph: out += b.text + "\n"; break;
      case Block::Kind::banner: out += "> **Warning:** " + b.text + "\n"; break;
      case Block::Kind::image: out += "![" + b.text + "](" + b.header.front() + ")\n"; break;
      case Block::Kind::table: {
        out += "|";
        for (const auto& h : b.header) out += " " + md_cell(h) + " |";
        out += "\n|";
        for (std::size_t i = 0; i < b.header.size(); ++i) out += " --- |";
        out += "\n";
        for (const auto& row : b.rows) {
          out += "|";
          for (const auto& cell : row) out += " " + md_cell(cell) + " |";
          out += "\n";
        }
        break;
      }
    }
  }
  return out;
}

std::string to_html(const Document& doc) {
  std::string out =
      "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" + html_escape(doc.title) +
      "</title>\n<style>\nbody{font-family:sans-serif;margin:2em;max-width:70em}\n"
      "table{border-collapse:collapse;margin:1em 0}\ntd,th{border:1px solid #999;padding:2px 6px;text-align:right}\n"
      "th{background:#eee}\n.warning{background:#fff3cd;border:1px solid #e0b000;padding:0.5em}\n"
      "img{max-width:100%}\n</style>\n</head>\n<body>\n<h1>" +
      html_escape(doc.title) + "</h1>\n";
  for (const auto& b : doc.blocks) {
    switch (b.kind) {
      case Block::Kind::heading: {
        const auto tag = "h" + std::to_string(b.level);
        out += "<" + tag + ">" + html_escape(b.text) + "</" + tag + ">\n";
        break;
      }
      case Block::Kind::paragraph: out += "<p>" + html_escape(b.text) + "</p>\n"; break;
      case Block::Kind::banner: out += "<div class=\"warning\"><strong>Warning:</strong> " + html_escape(b.text) + "</div>\n"; break;
      case Block::Kind::image:
        out += "<figure><img src=\"" + html_escape(b.header.front()) + "\" alt=\"" + html_escape(b.text) +
               "\"><figcaption>" + html_escape(b.text) + "</figcaption></figure>\n";
        break;
      case Block::Kind::table:
        out += "<table>\n<tr>";
        for (const auto& h : b.header) out += "<th>" + html_escape(h) + "</th>";
        out += "</tr>\n";
        for (const auto& row : b.rows) {
          out += "<tr>";
          for (const auto& cell : row) out += "<td>" + html_escape(cell) + "</td>";
          out += "</tr>\n";
        }
        out += "</table>\n";
        break;
    }
  }
  return out + "</body>\n</html>\n";
}

std::vector<std::vector<std::vector<std::string>>> markdown_tables(std::string_view markdown) {
  std::vector<std::vector<std::vector<std::string>>> tables;
  bool in_table = false;
  for (const auto& line : split(markdown, '\n')) {
    if (line.empty() || line.front() != '|') {
      in_table = false;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    for (std::size_t i = 1; i < line.size(); ++i) {
      if (line[i] == '\\' && i + 1 < line.size() && line[i + 1] == '|') {
        cell += '|';
        ++i;
      } else if (line[i] == '|') {
        cells.push_back(trim(cell));
        cell.clear();
      } else {
        cell += line[i];
      }
    }
    if (!in_table) {
      tables.emplace_back();
      in_table = true;
    }
    if (!cells.empty() && cells.front() == "---") continue;
    tables.back().push_back(cells);
  }
  return tables;
}

}  // namespace tabml::report
