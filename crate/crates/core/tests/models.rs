mod common;

use skipref::engine::SimOptions;
use skipref::models::stk::{parse_program, StkParams};
use skipref::models::{
    bstk_drains_agree, gen_model, gen_pair, refinement_map_of, FaultKind, Model, ModelKind, ModelParams,
    DEFAULT_STATE_CAP,
};
use skipref::refine::{check_skipping_refinement, explain_counterexample, Status, Verdict};

#[test]
fn buffered_stack_drains_agree_across_grid() {
    for p in common::bstk_grid() {
        let m = gen_model(ModelKind::Bstk, &ModelParams::Stk(p.clone())).unwrap();
        assert!(bstk_drains_agree(&p, &m).unwrap(), "{p:?}");
    }
}

#[test]
fn model_files_rebuild_the_same_map() {
    let params = ModelParams::Stk(StkParams::new(parse_program("push 1; push 0; pop; top").unwrap(), 3, 2));
    let pair = gen_pair(ModelKind::Bstk, &params, None, DEFAULT_STATE_CAP).unwrap();
    let c = Model::from_json(&pair.concrete.to_json()).unwrap();
    let a = Model::from_json(&pair.abstract_.to_json()).unwrap();
    assert_eq!(c.lts, pair.concrete.lts);
    assert_eq!(refinement_map_of(&c.meta, &a.meta).unwrap(), pair.map);
}

#[test]
fn faulty_runs_match_the_run_oracle() {
    // A small slice of the grid with every fault, both machine kinds.
    let stk = common::bstk_grid().into_iter().step_by(37).map(|p| (ModelKind::Bstk, ModelParams::Stk(p)));
    let mem = common::optmemc_grid().into_iter().step_by(53).map(|p| (ModelKind::Optmemc, ModelParams::Mem(p)));
    let mut killed = 0;
    for (kind, params) in stk.chain(mem) {
        for &fault in kind.faults() {
            let pair = gen_pair(kind, &params, Some(fault), DEFAULT_STATE_CAP).unwrap();
            let (c, a) = (&pair.concrete.lts, &pair.abstract_.lts);
            let v = check_skipping_refinement(c, a, &pair.map, &SimOptions::unbounded()).unwrap();
            let refines = common::refines_by_runs(c, a, &pair.map);
            assert_eq!(v.holds(), refines, "{kind} {fault} {params:?}");
            if !refines {
                killed += 1;
                let trace = v.counterexample.as_ref().unwrap();
                trace.validate(c).unwrap();
                assert!(explain_counterexample(&v).unwrap().contains("offending step"));
                let back = Verdict::from_json(&v.to_json()).unwrap();
                assert_eq!(back.counterexample.as_ref(), Some(trace));
            }
        }
    }
    assert!(killed > 0);
}

#[test]
fn skipped_pc_on_push_drain_is_caught() {
    let params = ModelParams::Stk(StkParams::new(parse_program("push 1; push 0; push 1").unwrap(), 3, 1));
    let pair = gen_pair(ModelKind::Bstk, &params, Some(FaultKind::SkipPcIncrement), DEFAULT_STATE_CAP).unwrap();
    let v = check_skipping_refinement(&pair.concrete.lts, &pair.abstract_.lts, &pair.map, &SimOptions::unbounded())
        .unwrap();
    assert_eq!(v.status, Status::Fails);
}
