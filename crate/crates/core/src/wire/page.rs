//! Splitting large list payloads into page messages and putting them back together.

use std::collections::BTreeMap;

use rand::Rng;

use super::{Message, MsgType, Origin, PageInfo, Value, WireError};

/// Header fields shared by every page of one transfer.
#[derive(Debug, Clone)]
pub struct PageTarget<'a> {
    pub widget_id: &'a str,
    pub attr: &'a str,
    pub origin: Origin,
    /// Sequence number of the first page; later pages count up from here.
    pub first_seq: u64,
}

/// Random 128-bit transfer id as 32 lowercase hex digits.
pub fn new_transfer_id<R: Rng + ?Sized>(rng: &mut R) -> String {
    format!("{:032x}", rng.gen::<u128>())
}

/// Number of pages `paginate` produces for `rows` rows.
pub fn page_count(rows: usize, page_size: usize) -> usize {
    rows.div_ceil(page_size).max(1)
}

/// Splits `rows` into `ceil(n / page_size)` page messages sharing `transfer_id`.
///
/// An empty list still yields one (empty) page.
pub fn paginate(
    target: &PageTarget<'_>,
    rows: &[Value],
    page_size: usize,
    transfer_id: &str,
) -> Result<Vec<Message>, WireError> {
    if page_size == 0 {
        return Err(WireError::InvalidPageSize);
    }
    let count = page_count(rows.len(), page_size) as u64;
    let chunks: Vec<&[Value]> = if rows.is_empty() {
        vec![&[]]
    } else {
        rows.chunks(page_size).collect()
    };
    Ok(chunks
        .into_iter()
        .enumerate()
        .map(|(i, chunk)| Message {
            widget_id: target.widget_id.to_owned(),
            msg_type: MsgType::Page,
            attr: target.attr.to_owned(),
            payload: Value::List(chunk.to_vec()),
            seq: target.first_seq + i as u64,
            origin: target.origin,
            page_info: Some(PageInfo {
                page_index: i as u64,
                page_count: count,
                transfer_id: transfer_id.to_owned(),
            }),
        })
        .collect())
}

/// Restores the original list from a complete set of pages in any order.
pub fn reassemble<'a, I>(pages: I) -> Result<Vec<Value>, WireError>
where
    I: IntoIterator<Item = &'a Message>,
{
    let mut transfer: Option<(&str, u64)> = None;
    let mut slots: BTreeMap<u64, &[Value]> = BTreeMap::new();
    for msg in pages {
        let info = msg
            .page_info
            .as_ref()
            .ok_or(WireError::MissingField("page_info"))?;
        match transfer {
            None => transfer = Some((&info.transfer_id, info.page_count)),
            Some((id, count)) if id != info.transfer_id || count != info.page_count => {
                return Err(WireError::MixedTransfer)
            }
            Some(_) => {}
        }
        let rows = msg.payload.as_list().ok_or(WireError::InvalidField {
            field: "payload",
            reason: "page payload must be a list".into(),
        })?;
        if slots.insert(info.page_index, rows).is_some() {
            return Err(WireError::MixedTransfer);
        }
    }
    let Some((_, count)) = transfer else {
        return Err(WireError::IncompleteTransfer {
            missing_pages: Vec::new(),
        });
    };
    let missing: Vec<u64> = (0..count).filter(|i| !slots.contains_key(i)).collect();
    if !missing.is_empty() {
        return Err(WireError::IncompleteTransfer {
            missing_pages: missing,
        });
    }
    Ok(slots.into_values().flat_map(|rows| rows.iter().cloned()).collect())
}

/// Receiver-side buffer that collects pages per transfer as they arrive.
#[derive(Debug, Default)]
pub struct Reassembler {
    pending: BTreeMap<String, Vec<Message>>,
}

/// A fully received paged transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletedTransfer {
    pub attr: String,
    pub rows: Vec<Value>,
    /// Highest sequence number among the pages.
    pub seq: u64,
    pub origin: Origin,
}

impl Reassembler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Buffers `page`; returns the rows once every page of its transfer is in.
    pub fn accept(&mut self, page: Message) -> Result<Option<CompletedTransfer>, WireError> {
        let info = page
            .page_info
            .clone()
            .ok_or(WireError::MissingField("page_info"))?;
        let buffered = self.pending.entry(info.transfer_id.clone()).or_default();
        if let Some(first) = buffered.first() {
            if first.attr != page.attr || first.page_info.as_ref().map(|p| p.page_count) != Some(info.page_count) {
                self.pending.remove(&info.transfer_id);
                return Err(WireError::MixedTransfer);
            }
        }
        buffered.push(page);
        if buffered.len() as u64 != info.page_count {
            return Ok(None);
        }
        let pages = self.pending.remove(&info.transfer_id).unwrap_or_default();
        let rows = reassemble(&pages)?;
        let last = pages.iter().max_by_key(|m| m.seq).expect("complete transfer has pages");
        Ok(Some(CompletedTransfer {
            attr: last.attr.clone(),
            rows,
            seq: last.seq,
            origin: last.origin,
        }))
    }

    /// Transfers with at least one page outstanding.
    pub fn in_flight(&self) -> usize {
        self.pending.len()
    }
}
