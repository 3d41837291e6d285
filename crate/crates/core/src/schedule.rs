//! No-repeat pairing across rounds, built with the circle method.

use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An unordered pair. `first`/`second` keep the deterministic order the scheduler produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair<T> {
    pub first: T,
    pub second: T,
}

impl<T: Ord + Clone> Pair<T> {
    pub fn unordered_key(&self) -> (T, T) {
        if self.first <= self.second {
            (self.first.clone(), self.second.clone())
        } else {
            (self.second.clone(), self.first.clone())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round<T> {
    pub pairs: Vec<Pair<T>>,
    /// Set when the participant count is odd.
    pub bye: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingSchedule<T> {
    pub rounds: Vec<Round<T>>,
}

impl<T> PairingSchedule<T> {
    pub fn pair_count(&self) -> usize {
        self.rounds.iter().map(|r| r.pairs.len()).sum()
    }
}

/// Largest number of rounds for which no pair has to repeat.
pub fn max_rounds(participants: usize) -> usize {
    if participants.is_multiple_of(2) {
        participants.saturating_sub(1)
    } else {
        participants
    }
}

/// Builds `rounds` rounds of disjoint pairs in which no unordered pair repeats.
///
/// The first participant stays fixed and the others rotate one seat per round. With an
/// odd count an empty seat is fixed instead, so every participant sits out exactly once
/// per full cycle.
pub fn generate_round_robin_schedule<T>(participants: &[T], rounds: usize) -> Result<PairingSchedule<T>>
where
    T: Clone + Eq + Hash,
{
    let n = participants.len();
    if n < 2 {
        return Err(Error::validation("a schedule needs at least two participants"));
    }
    if rounds == 0 {
        return Err(Error::validation("a schedule needs at least one round"));
    }
    let unique: HashSet<&T> = participants.iter().collect();
    if unique.len() != n {
        return Err(Error::validation("participant list contains duplicates"));
    }
    let max = max_rounds(n);
    if rounds > max {
        return Err(Error::Infeasible {
            requested: rounds,
            max,
            participants: n,
        });
    }

    // seat 0 is fixed; seats 1.. rotate
    let mut seats: Vec<Option<&T>> = Vec::with_capacity(n + 1);
    if n % 2 == 1 {
        seats.push(None);
    }
    seats.extend(participants.iter().map(Some));
    let seat_count = seats.len();
    let ring = seat_count - 1;

    let mut schedule = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let at = |pos: usize| -> Option<&T> {
            if pos == 0 {
                seats[0]
            } else {
                seats[1 + (pos - 1 + ring - round % ring) % ring]
            }
        };
        let mut pairs = Vec::with_capacity(seat_count / 2);
        let mut bye = None;
        for i in 0..seat_count / 2 {
            match (at(i), at(seat_count - 1 - i)) {
                (Some(a), Some(b)) => pairs.push(Pair {
                    first: a.clone(),
                    second: b.clone(),
                }),
                (Some(p), None) | (None, Some(p)) => bye = Some(p.clone()),
                (None, None) => unreachable!("only one empty seat"),
            }
        }
        schedule.push(Round { pairs, bye });
    }
    Ok(PairingSchedule { rounds: schedule })
}
