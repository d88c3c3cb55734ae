//! Turning origin URLs into file-system friendly names.

fn strip_scheme(origin: &str) -> &str {
    match origin.find("://") {
        Some(pos) => &origin[pos + 3..],
        None => origin,
    }
}

fn underscore(text: &str) -> String {
    let mapped: String = text
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    mapped.trim_matches('_').to_string()
}

fn trim_suffixes(text: &str) -> &str {
    let text = text.trim_end_matches('/');
    text.strip_suffix(".git").unwrap_or(text)
}

/// Directory name for an origin inside an archive root: scheme stripped,
/// host kept, every non-alphanumeric character replaced by `_`.
pub fn sanitize_origin(origin: &str) -> String {
    let name = underscore(trim_suffixes(strip_scheme(origin)));
    if name.is_empty() {
        "origin".to_string()
    } else {
        name
    }
}

/// Short name used in report file names: like [`sanitize_origin`] but the
/// host is dropped for URLs, so `https://github.com/example/project` becomes
/// `example_project`.
pub fn report_name(origin: &str) -> String {
    let has_scheme = origin.contains("://");
    let rest = trim_suffixes(strip_scheme(origin));
    let rest = if has_scheme {
        match rest.find('/') {
            Some(pos) => &rest[pos + 1..],
            None => rest,
        }
    } else if let Some((_, path)) = rest.split_once(':').filter(|(h, _)| h.contains('@')) {
        // scp-like syntax: user@host:owner/repo
        path
    } else {
        rest
    };
    let name = underscore(rest);
    if name.is_empty() {
        sanitize_origin(origin)
    } else {
        name
    }
}
