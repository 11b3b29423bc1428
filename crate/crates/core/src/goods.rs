//! Delivered-price view of the final-goods varieties.

use crate::ces::Variety;
use crate::economy::Topology;

/// Prices and counts of every final-goods variety, with the trade-cost
/// tensor needed to deliver them.
#[derive(Debug, Clone, Copy)]
pub struct GoodsMarket<'a> {
    pub topology: &'a Topology,
    /// Producer prices of domestic varieties `[sector][region]`.
    pub prices: &'a [Vec<f64>],
    pub foreign_price: f64,
    /// Domestic firm counts `[sector][region]`.
    pub firms: &'a [Vec<f64>],
}

/// Identifies a variety group: domestic `(sector, region)` or the foreign one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarietyId {
    pub sector: usize,
    pub region: usize,
}

impl<'a> GoodsMarket<'a> {
    pub fn producer_price(&self, v: VarietyId) -> f64 {
        if self.is_foreign(v) {
            self.foreign_price
        } else {
            self.prices[v.sector][v.region]
        }
    }

    pub fn count(&self, v: VarietyId) -> f64 {
        if self.is_foreign(v) {
            1.0
        } else {
            self.firms[v.sector][v.region]
        }
    }

    pub fn is_foreign(&self, v: VarietyId) -> bool {
        v.sector == self.topology.foreign_sector()
    }

    /// All variety groups available to domestic buyers: domestic cells
    /// followed by the foreign variety.
    pub fn all(&self) -> impl Iterator<Item = VarietyId> + '_ {
        let t = self.topology;
        (0..t.domestic_sectors())
            .flat_map(move |s| (0..t.domestic_regions()).map(move |r| VarietyId { sector: s, region: r }))
            .chain(std::iter::once(VarietyId {
                sector: t.foreign_sector(),
                region: t.foreign_region(),
            }))
    }

    /// Domestic variety groups only.
    pub fn domestic(&self) -> impl Iterator<Item = VarietyId> + '_ {
        self.all().filter(move |v| !self.is_foreign(*v))
    }

    /// Varieties of one supplying sector (domestic or foreign).
    pub fn of_sector(&self, sector: usize) -> impl Iterator<Item = VarietyId> + '_ {
        self.all().filter(move |v| v.sector == sector)
    }

    /// Buyer price in `destination` including trade cost and the ad-valorem tax.
    pub fn delivered_price(&self, v: VarietyId, destination: usize, tax: f64) -> f64 {
        self.topology.tau(v.sector, v.region, destination) * (1.0 + tax) * self.producer_price(v)
    }

    /// CES variety record for buyers in `destination` with sector taxes `taxes`
    /// and sector weights `weights` (pass `None` for an unweighted nest).
    pub fn variety(
        &self,
        v: VarietyId,
        destination: usize,
        taxes: Option<&[f64]>,
        weights: Option<&[f64]>,
    ) -> Variety {
        let tax = taxes.map_or(0.0, |t| t[v.sector]);
        let weight = weights.map_or(1.0, |w| w[v.sector]);
        Variety::new(self.count(v), weight, self.delivered_price(v, destination, tax))
    }
}
