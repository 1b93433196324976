#include "licem/explain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace licem {

namespace {

using nlohmann::ordered_json;

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string fixed2(double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

std::string shortest(double v) {
    return ordered_json(v).dump();
}

} // namespace

ExplanationRecord explain_output(const Model& model, const Model::Output& output, int row,
                                 int class_index, const ConceptSchema& schema, const std::string& id) {
    const ModelConfig& cfg = model.config();
    if (cfg.kind != ModelKind::licem && cfg.kind != ModelKind::self_licem) {
        throw UsageError("explanations require a model with a linear-equation head");
    }
    if (class_index < 0 || class_index >= cfg.class_count) {
        throw UsageError("explain: class index out of range");
    }
    ExplanationRecord record;
    record.id = id;
    record.predicted_class = class_index;
    record.class_name = schema.class_names[static_cast<size_t>(class_index)];
    record.probability = model.class_probability(output, row, class_index);
    record.logit = model.class_logit(output, row, class_index);
    record.bias = model.class_bias(output, row, class_index);
    for (int j = 0; j < cfg.concept_count; ++j) {
        ExplanationRecord::Item item;
        item.concept_name = schema.concept_names[static_cast<size_t>(j)];
        item.score = output.task_scores.at(row, j);
        item.weight = model.class_weight(output, row, class_index, j);
        item.contribution = item.weight * item.score;
        record.items.push_back(std::move(item));
    }
    std::stable_sort(record.items.begin(), record.items.end(),
                     [](const ExplanationRecord::Item& a, const ExplanationRecord::Item& b) {
                         return std::fabs(a.contribution) > std::fabs(b.contribution);
                     });
    return record;
}

ExplanationRecord explain_sample(const Model& model, const ConceptSchema& schema, const std::string& id,
                                 const Matrix& embedding_row, const Matrix* injected_scores) {
    Model::ForwardOptions options;
    options.injected = injected_scores;
    Model::Output out = model.infer(embedding_row, options);
    return explain_output(model, out, 0, out.predicted[0], schema, id);
}

std::string render_json(const ExplanationRecord& record) {
    ordered_json j;
    j["id"] = record.id;
    j["predicted_class"] = record.predicted_class;
    j["class_name"] = record.class_name;
    j["probability"] = record.probability;
    j["logit"] = record.logit;
    j["bias"] = record.bias;
    j["concepts"] = ordered_json::array();
    for (const auto& item : record.items) {
        ordered_json it;
        it["concept"] = item.concept_name;
        it["score"] = item.score;
        it["weight"] = item.weight;
        it["contribution"] = item.contribution;
        j["concepts"].push_back(it);
    }
    return j.dump(2) + "\n";
}

ExplanationRecord parse_record(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("explanation record: invalid JSON: ") + e.what());
    }
    ExplanationRecord record;
    record.id = j.at("id").get<std::string>();
    record.predicted_class = j.at("predicted_class").get<int>();
    record.class_name = j.at("class_name").get<std::string>();
    record.probability = j.at("probability").get<double>();
    record.logit = j.at("logit").get<double>();
    record.bias = j.at("bias").get<double>();
    for (const auto& it : j.at("concepts")) {
        ExplanationRecord::Item item;
        item.concept_name = it.at("concept").get<std::string>();
        item.score = it.at("score").get<double>();
        item.weight = it.at("weight").get<double>();
        item.contribution = it.at("contribution").get<double>();
        record.items.push_back(std::move(item));
    }
    return record;
}

std::string render_csv(const ExplanationRecord& record) {
    std::ostringstream os;
    os << "concept,contribution\n";
    for (const auto& item : record.items) {
        std::string name = item.concept_name;
        const bool quote = name.find(',') != std::string::npos || name.find('"') != std::string::npos;
        if (quote) {
            std::string quoted = "\"";
            for (char c : name) {
                if (c == '"') {
                    quoted += '"';
                }
                quoted += c;
            }
            quoted += '"';
            name = quoted;
        }
        os << name << "," << shortest(item.contribution) << "\n";
    }
    return os.str();
}

std::string render_svg(const ExplanationRecord& record) {
    const int m = static_cast<int>(record.items.size());
    const int width = 640;
    const int height = 40 * std::max(1, m);
    const int label_gutter = 170;
    const double axis_x = label_gutter + (width - label_gutter) / 2.0;
    const double half_span = (width - label_gutter) / 2.0 - 10.0;

    double max_abs = 0.0;
    for (const auto& item : record.items) {
        max_abs = std::max(max_abs, std::fabs(item.contribution));
    }
    const double unit = max_abs > 0.0 ? half_span / max_abs : 0.0;

    // rows top->bottom in ascending importance so the largest bar is at the bottom
    std::vector<const ExplanationRecord::Item*> rows;
    for (const auto& item : record.items) {
        rows.push_back(&item);
    }
    std::reverse(rows.begin(), rows.end());

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "  <title>" << xml_escape(record.id) << " : " << xml_escape(record.class_name) << " ("
       << fixed2(record.probability) << ")</title>\n";
    os << "  <line x1=\"" << fixed2(axis_x) << "\" y1=\"0\" x2=\"" << fixed2(axis_x) << "\" y2=\"" << height
       << "\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
    for (int r = 0; r < m; ++r) {
        const ExplanationRecord::Item& item = *rows[static_cast<size_t>(r)];
        const double y = 40.0 * r;
        const double bar = item.contribution * unit;
        const double x0 = bar >= 0.0 ? axis_x : axis_x + bar;
        const double w = std::fabs(bar);
        const char* fill = item.contribution >= 0.0 ? "#4878a8" : "#b04030";
        os << "  <text x=\"4\" y=\"" << fixed2(y + 24.0) << "\" font-family=\"monospace\" font-size=\"13\">"
           << xml_escape(item.concept_name) << "</text>\n";
        os << "  <rect x=\"" << fixed2(x0) << "\" y=\"" << fixed2(y + 12.0) << "\" width=\"" << fixed2(w)
           << "\" height=\"16\" fill=\"" << fill << "\"/>\n";
        os << "  <text x=\"" << fixed2(axis_x + (bar >= 0.0 ? w + 4.0 : -w - 4.0))
           << "\" y=\"" << fixed2(y + 24.0) << "\" font-family=\"monospace\" font-size=\"11\""
           << (bar >= 0.0 ? "" : " text-anchor=\"end\"") << ">" << fixed2(item.contribution)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string render(const ExplanationRecord& record, const std::string& format) {
    if (format == "json") {
        return render_json(record);
    }
    if (format == "csv") {
        return render_csv(record);
    }
    if (format == "svg") {
        return render_svg(record);
    }
    throw UsageError("unknown explanation format '" + format + "' (expected json, csv or svg)");
}

GlobalSummary global_summary(const Model& model, const TensorData& data, const ConceptSchema& schema) {
    const ModelConfig& cfg = model.config();
    if (cfg.kind != ModelKind::licem && cfg.kind != ModelKind::self_licem) {
        throw UsageError("global_summary requires a model with a linear-equation head");
    }
    Batch batch = data.all();
    Model::ForwardOptions options;
    if (batch.has_injected()) {
        options.injected = &batch.injected_scores;
    }
    Model::Output out = model.infer(batch.embeddings, options);

    GlobalSummary summary;
    summary.samples = batch.size();
    for (int j = 0; j < cfg.concept_count; ++j) {
        ConceptSummary cs;
        cs.concept_name = schema.concept_names[static_cast<size_t>(j)];
        double abs_w = 0.0;
        double contrib = 0.0;
        int pos = 0, neg = 0, zero = 0;
        for (int i = 0; i < batch.size(); ++i) {
            const int p = out.predicted[static_cast<size_t>(i)];
            const double w = model.class_weight(out, i, p, j);
            const double c = w * out.task_scores.at(i, j);
            abs_w += std::fabs(w);
            contrib += c;
            if (c > 0.0) {
                ++pos;
            } else if (c < 0.0) {
                ++neg;
            } else {
                ++zero;
            }
        }
        cs.mean_abs_weight = abs_w / batch.size();
        cs.mean_contribution = contrib / batch.size();
        cs.sign_consistency = static_cast<double>(std::max({pos, neg, zero})) / batch.size();
        summary.concepts.push_back(std::move(cs));
    }
    return summary;
}

std::string summary_to_json(const GlobalSummary& summary) {
    ordered_json j;
    j["samples"] = summary.samples;
    j["concepts"] = ordered_json::array();
    for (const auto& cs : summary.concepts) {
        ordered_json it;
        it["concept"] = cs.concept_name;
        it["mean_abs_weight"] = cs.mean_abs_weight;
        it["mean_contribution"] = cs.mean_contribution;
        it["sign_consistency"] = cs.sign_consistency;
        j["concepts"].push_back(it);
    }
    return j.dump(2) + "\n";
}

} // namespace licem
