use std::collections::BTreeSet;

/// One lookup row: an index code standing for a combination of TT payloads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexRow {
    pub code: Vec<u8>,
    /// One payload per participating flow, in `IndexTable::flows` order.
    pub values: Vec<Vec<u8>>,
}

impl IndexRow {
    pub fn payload_len(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexTable {
    pub id: String,
    pub flows: Vec<String>,
    pub rows: Vec<IndexRow>,
}

impl IndexTable {
    pub fn validate(&self) -> Result<(), String> {
        if self.flows.is_empty() {
            return Err("no participating flows".into());
        }
        let mut codes = BTreeSet::new();
        let mut combos = BTreeSet::new();
        for (i, r) in self.rows.iter().enumerate() {
            if r.values.len() != self.flows.len() {
                return Err(format!("row {i} has {} values for {} flows", r.values.len(), self.flows.len()));
            }
            if r.code.is_empty() {
                return Err(format!("row {i} has an empty code"));
            }
            if r.code.len() >= r.payload_len() {
                return Err(format!("row {i}: code of {} B does not shrink {} B of payload", r.code.len(), r.payload_len()));
            }
            if !codes.insert(&r.code) {
                return Err(format!("row {i}: duplicate code"));
            }
            if !combos.insert(&r.values) {
                return Err(format!("row {i}: duplicate value combination"));
            }
        }
        Ok(())
    }

    pub fn lookup(&self, values: &[Vec<u8>]) -> Option<&IndexRow> {
        self.rows.iter().find(|r| r.values == values)
    }

    pub fn decode(&self, code: &[u8]) -> Option<&IndexRow> {
        self.rows.iter().find(|r| r.code == code)
    }

    /// Worst (largest) code-to-payload ratio over all rows; `None` for an empty table.
    pub fn r_index(&self) -> Option<tsn_minplus::Q> {
        self.rows
            .iter()
            .map(|r| tsn_minplus::Q::new(r.code.len() as i128, r.payload_len() as i128))
            .max()
    }
}
