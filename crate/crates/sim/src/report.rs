//! Ordered `key = value` run reports.

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends an entry; floats are written in their shortest round-trip form.
    pub fn push(&mut self, key: impl Into<String>, value: impl ReportValue) {
        self.entries.push((key.into(), value.render()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub trait ReportValue {
    fn render(&self) -> String;
}

impl ReportValue for f64 {
    fn render(&self) -> String {
        format!("{self:?}")
    }
}

macro_rules! display_value {
    ($($t:ty),*) => {
        $(impl ReportValue for $t {
            fn render(&self) -> String {
                self.to_string()
            }
        })*
    };
}

display_value!(bool, i32, i64, u64, usize, String, crate::config::Mode);

impl<T: ReportValue + ?Sized> ReportValue for &T {
    fn render(&self) -> String {
        (**self).render()
    }
}

impl ReportValue for str {
    fn render(&self) -> String {
        self.to_string()
    }
}
