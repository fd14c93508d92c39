use std::path::{Component, Path, PathBuf};

/// `asset_ref` resolved under `root`, refusing anything that could escape it.
pub fn asset_path(root: &Path, asset_ref: &str) -> Option<PathBuf> {
    let rel = Path::new(asset_ref);
    if asset_ref.is_empty() || !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return None;
    }
    Some(root.join(rel))
}

pub fn content_type(path: &Path) -> &'static str {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "png" => "image/png",
        "jpg" | "jpeg" => "image/jpeg",
        "gif" => "image/gif",
        "webp" => "image/webp",
        "svg" => "image/svg+xml",
        "bmp" => "image/bmp",
        _ => "application/octet-stream",
    }
}

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Grey SVG tile with the label centred on it.
pub fn placeholder_svg(label: &str) -> String {
    let label = escape_xml(label);
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"320\" height=\"240\" viewBox=\"0 0 320 240\">",
            "<rect width=\"320\" height=\"240\" fill=\"#d9dde3\"/>",
            "<text x=\"160\" y=\"126\" font-family=\"sans-serif\" font-size=\"20\" fill=\"#39424e\" ",
            "text-anchor=\"middle\">{}</text></svg>"
        ),
        label
    )
}
