//! Plain-text table rendering shared by the report writers.

/// Formats `value` with `decimals` digits, rounding ties away from zero.
///
/// A relative slack of 1e-12 absorbs binary representation error, so a value
/// meant as `11.055` prints as `11.06` even though its nearest `f64` is a
/// hair below.
pub fn format_fixed_half_up(value: f64, decimals: u32) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    let scale = 10u64.pow(decimals) as f64;
    let magnitude = value.abs() * scale;
    let units = (magnitude * (1.0 + 1e-12) + 0.5).floor() as u64;
    let sign = if value < 0.0 && units != 0 { "-" } else { "" };
    if decimals == 0 {
        return format!("{sign}{units}");
    }
    let div = 10u64.pow(decimals);
    format!(
        "{sign}{}.{:0width$}",
        units / div,
        units % div,
        width = decimals as usize
    )
}

/// Left-aligned first column, right-aligned remaining columns, two-space gaps.
#[derive(Debug, Clone)]
pub struct TextTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new(header: Vec<String>) -> Self {
        TextTable {
            header,
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let ncols = std::iter::once(&self.header)
            .chain(&self.rows)
            .map(Vec::len)
            .max()
            .unwrap_or(0);
        let mut widths = vec![0usize; ncols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (i, c) in r.iter().enumerate() {
                widths[i] = widths[i].max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let mut s = String::new();
            for (i, w) in widths.iter().enumerate() {
                let c = cells.get(i).map(String::as_str).unwrap_or("");
                if i == 0 {
                    s.push_str(&format!("{c:<w$}"));
                } else {
                    s.push_str(&format!("  {c:>w$}"));
                }
            }
            s.trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * ncols.saturating_sub(1)));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}
