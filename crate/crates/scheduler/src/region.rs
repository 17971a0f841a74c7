use std::fmt;
use std::sync::Arc;

/// Name of a whole array whose use orders tasks. Matching is by equality only.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegionId(Arc<str>);

impl RegionId {
    pub fn new(name: &str) -> Self {
        RegionId(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for RegionId {
    fn from(s: &str) -> Self {
        RegionId::new(s)
    }
}

impl From<String> for RegionId {
    fn from(s: String) -> Self {
        RegionId(Arc::from(s))
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Access {
    Read,
    Write,
    ReadWrite,
}

impl Access {
    pub fn writes(self) -> bool {
        !matches!(self, Access::Read)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DataRegion {
    pub id: RegionId,
    pub access: Access,
}

impl DataRegion {
    pub fn read(id: impl Into<RegionId>) -> Self {
        DataRegion { id: id.into(), access: Access::Read }
    }

    pub fn write(id: impl Into<RegionId>) -> Self {
        DataRegion { id: id.into(), access: Access::Write }
    }

    pub fn read_write(id: impl Into<RegionId>) -> Self {
        DataRegion { id: id.into(), access: Access::ReadWrite }
    }
}
