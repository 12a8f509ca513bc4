// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;
use std::net::Ipv4Addr;

use crate::error::ParamsError;
use crate::params::{LinkParams, LinkSpec};

/// Number of directed links in a full mesh of `n` nodes.
pub fn mesh_link_count(n: usize) -> usize {
    n * n.saturating_sub(1)
}

/// Every ordered pair `(a, b)` with `a != b`, sources in the outer loop and
/// destinations in the inner loop, both in input order.
pub fn build_full_mesh(
    addresses: &[Ipv4Addr],
    default_params: LinkParams,
) -> Result<Vec<LinkSpec>, ParamsError> {
    if addresses.len() < 2 {
        return Err(ParamsError::MeshTooSmall(addresses.len()));
    }
    let mut seen = HashSet::with_capacity(addresses.len());
    for &addr in addresses {
        if !seen.insert(addr) {
            return Err(ParamsError::DuplicateAddress(addr));
        }
    }

    let mut links = Vec::with_capacity(mesh_link_count(addresses.len()));
    for &src in addresses {
        for &dst in addresses {
            if src != dst {
                links.push(LinkSpec::new(src, dst, default_params)?);
            }
        }
    }
    Ok(links)
}

/// Deterministic distinct addresses for synthetic tables, counting up from
/// `11.0.0.1`. Never yields anything in `10.0.0.0/8`.
pub fn synthetic_address(index: usize) -> Ipv4Addr {
    debug_assert!(index < (1 << 24) - 1);
    Ipv4Addr::from(0x0b00_0001u32 + index as u32)
}
