use bitflags::bitflags;

bitflags! {
    /// Invariant checks recorded on a motion sample instead of aborting,
    /// when a run is executed beyond its certified slope range.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, serde::Serialize, serde::Deserialize)]
    pub struct Warnings: u16 {
        const SLOPE_OVERRIDE = 1 << 0;
        const MULTIPLE_ROOTS = 1 << 1;
        const LATITUDE = 1 << 2;
        const NON_MONOTONE = 1 << 3;
        const RIGIDITY = 1 << 4;
        const CONTACT = 1 << 5;
        const JUMP = 1 << 6;
        const RADIUS = 1 << 7;
    }
}

impl Warnings {
    /// Semicolon-joined flag names, empty when clear.
    pub fn joined(self) -> String {
        self.iter_names()
            .map(|(n, _)| n.to_ascii_lowercase())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// Whether violations abort the computation or are recorded as warnings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Policy {
    pub enforce: bool,
}

impl Policy {
    pub const STRICT: Policy = Policy { enforce: true };
    pub const OVERRIDE: Policy = Policy { enforce: false };

    /// Either return `err` (strict) or record `flag` (override).
    pub(crate) fn violation(
        self,
        warnings: &mut Warnings,
        flag: Warnings,
        err: impl FnOnce() -> crate::WobbleError,
    ) -> crate::Result<()> {
        if self.enforce {
            Err(err())
        } else {
            warnings.insert(flag);
            Ok(())
        }
    }
}
