//! Sub-delegation routing between trusted neighbors.

use crate::types::{DataOwnerState, DoId, StepDecision, Task, TaskId, TrustNetwork};
use crate::Real;

/// One task handed from `from` to `to`, paid at the delegate's posted price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    pub task: TaskId,
    pub from: DoId,
    pub to: DoId,
    pub payment: Real,
}

/// Moves up to `decisions[i].subdelegate` pending tasks out of each owner's
/// queue, in ascending owner order.
///
/// A delegator hands off its highest-payment transferable tasks (depth below
/// `max_depth`; ties by arrival then id). Each task goes to the cheapest
/// neighbor (ties by id) whose snapshot reputation meets the delegator's
/// threshold, whose posted price does not exceed the task's payment, and
/// which still has inbound room. `room[k]` is decremented per received task.
/// A delegator stops at its first task no neighbor can take.
///
/// Moved tasks are removed from `pending` and appended to `inbox` of the
/// delegate with depth incremented, payment set to the delegate's price,
/// `arrival_step = step` and the on-time judgement reset.
#[allow(clippy::too_many_arguments)]
pub fn route_subdelegations(
    pending: &mut [Vec<Task<Real>>],
    inbox: &mut [Vec<Task<Real>>],
    room: &mut [u32],
    states: &[DataOwnerState<Real>],
    decisions: &[StepDecision<Real>],
    network: &TrustNetwork,
    max_depth: u32,
    step: u32,
) -> Vec<Transfer> {
    let mut transfers = Vec::new();
    for i in 0..states.len() {
        let wanted = decisions[i].subdelegate as usize;
        if wanted == 0 {
            continue;
        }
        let r_min = states[i].reputation_threshold;
        let mut delegates: Vec<DoId> = network
            .neighbors(DoId(i))
            .iter()
            .copied()
            .filter(|k| states[k.index()].reputation >= r_min)
            .collect();
        delegates.sort_by(|a, b| {
            decisions[a.index()]
                .price
                .total_cmp(&decisions[b.index()].price)
                .then(a.cmp(b))
        });

        let mut candidates: Vec<usize> = (0..pending[i].len())
            .filter(|&j| pending[i][j].delegation_depth < max_depth)
            .collect();
        candidates.sort_by(|&a, &b| {
            let (ta, tb) = (&pending[i][a], &pending[i][b]);
            tb.unit_payment
                .total_cmp(&ta.unit_payment)
                .then(ta.arrival_step.cmp(&tb.arrival_step))
                .then(ta.id.cmp(&tb.id))
        });

        let mut routed: Vec<(TaskId, DoId)> = Vec::new();
        for &j in candidates.iter().take(wanted) {
            let task = &pending[i][j];
            let Some(&k) = delegates
                .iter()
                .find(|k| decisions[k.index()].price <= task.unit_payment && room[k.index()] > 0)
            else {
                break;
            };
            room[k.index()] -= 1;
            routed.push((task.id, k));
        }
        for (id, k) in routed {
            let pos = pending[i]
                .iter()
                .position(|t| t.id == id)
                .expect("routed task is pending");
            let mut task = pending[i].remove(pos);
            let payment = decisions[k.index()].price;
            transfers.push(Transfer {
                task: id,
                from: DoId(i),
                to: k,
                payment,
            });
            task.delegation_depth += 1;
            task.unit_payment = payment;
            task.arrival_step = step;
            task.holder = k;
            task.judged = false;
            inbox[k.index()].push(task);
        }
    }
    transfers
}
