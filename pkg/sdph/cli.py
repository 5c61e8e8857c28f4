"""cli
Command-line surface: one subcommand per pipeline stage, and the
synthetic staging study.

buildParser() -> ArgumentParser
    Every subcommand and flag
execute(argv) -> summary
    Parses argv, resolves the configuration and runs one command
cmd_reproduce(config) -> report
    Phantoms -> diagrams -> phase models -> held-out classification,
    plus the global texture tree of every phantom
"""

import argparse
from dataclasses import fields
import logging
from pathlib import Path
from typing import Any, Callable as function, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import builtin, lang, system
from . import cubical, diagram as dg, fileio, mixture, phantom, sdt
from . import texture_global, texture_local
from .config import CLUSTERINGS, PipelineConfig, loadConfig

logger = logging.getLogger(__name__)

Summary = Dict[str, Any]


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors raise ConfigError instead of exiting."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise builtin.ConfigError(message)


# Helpers


def configFrom(args: argparse.Namespace) -> PipelineConfig:
    """The config file (or defaults) with every flag that names a config
    key applied on top.
    """
    config = loadConfig(args.config)
    overrides = {
        f.name: getattr(args, f.name)
        for f in fields(PipelineConfig) if hasattr(args, f.name)
    }
    return config.withOverrides(**overrides)


def sampleId(path: str, source_id: str = '') -> str:
    if source_id:
        return source_id
    name = Path(path).name
    for suffix in ('.density.csv', '.csv', '.fld', '.vol'):
        if name.endswith(suffix):
            return name[:-len(suffix)]
    return name


def chunkPath(path: str, index: int) -> str:
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{index}{p.suffix}"))


def degreeCounts(diagram: lang.Diagram) -> Dict[str, int]:
    return {str(k): len(diagram.inDegree(k)) for k in range(3)}


def quadrantPoints(path: str, config: PipelineConfig) -> Tuple[str, lang.WeightedPoints]:
    """Sample id and configured-quadrant points of a diagram file."""
    diagram = dg.filter_persistence(fileio.readDiagram(path), config.persistence_tau)
    return (sampleId(path, diagram.source_id),
            dg.select_quadrant(diagram, config.quadrant))


def densityOf(points: lang.WeightedPoints, bounds: lang.Bounds,
              config: PipelineConfig) -> lang.DensityGrid:
    """KDE of points; a sample without points has the zero density."""
    if len(points) == 0:
        return lang.DensityGrid(bounds, config.kde_resolution,
                                np.zeros(config.kde_resolution))
    return texture_global.kde(points, bounds, config.kde_resolution, config.kde_sigma)


def readModels(paths: Sequence[str]) -> Dict[str, lang.MixtureModel]:
    models: Dict[str, lang.MixtureModel] = {}
    for path in paths:
        model = fileio.readModel(path)
        if model.phase is None:
            raise builtin.FormatError("model has no phase label", path)
        if model.phase in models:
            raise builtin.ValidationError(f"two models for phase {model.phase}", path)
        models[model.phase] = model
    return models


def floats(mapping: Mapping[str, float]) -> Dict[str, float]:
    return {k: float(v) for k, v in mapping.items()}


# Commands


def cmd_phantom(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    dims = config.phantom_dims
    if args.kind == 'ball':
        center = args.center or phantom.centreOf(dims)
        vol = phantom.make_ball(dims, center, args.radius)
    elif args.kind == 'torus':
        vol = phantom.make_torus(dims, args.center, args.ring_radius,
                                 args.tube_radius, args.axis)
    else:
        if args.phantom_class is None:
            raise builtin.ConfigError("network phantoms need --class", 'class')
        spec = phantom.PhantomSpec.forClass(args.phantom_class, config.seed, dims)
        vol = phantom.make_vessel_network(spec)
    fileio.writeVolume(args.output, vol)
    return {
        'outputs': [args.output],
        'dims': list(vol.dims),
        'occupied': int(np.count_nonzero(vol.voxels)),
    }


def cmd_sdt(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    vol = fileio.readVolume(args.input)
    transform = sdt.signed_distance_bruteforce if args.bruteforce else sdt.signed_distance
    field = transform(vol)
    fileio.writeField(args.output, field)
    return {
        'outputs': [args.output],
        'min': float(field.values.min()),
        'max': float(field.values.max()),
    }


def cmd_ph(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    field = fileio.readField(args.input)
    source_id = args.source_id or sampleId(args.input)
    if args.bruteforce:
        if config.chunk_grid != (1, 1, 1):
            raise builtin.ConfigError("the oracle does not run chunked", 'chunk_grid')
        diagrams = [cubical.persistence_bruteforce(field, source_id)]
    elif config.chunk_grid == (1, 1, 1):
        diagrams = [cubical.persistence(field, source_id)]
    else:
        diagrams = cubical.persistence_chunked(field, config.chunk_grid, source_id)
    if len(diagrams) == 1:
        outputs = [args.output]
    else:
        outputs = [chunkPath(args.output, i) for i in range(len(diagrams))]
    for path, diagram in zip(outputs, diagrams):
        fileio.writeDiagram(path, diagram)
    return {
        'outputs': outputs,
        'points': [degreeCounts(d) for d in diagrams],
        'boundary_artifacts': any(d.boundary_artifacts for d in diagrams),
    }


def cmd_quadrant(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    diagram = dg.filter_persistence(fileio.readDiagram(args.input), config.persistence_tau)
    points = dg.quadrant_points(diagram)
    meta = {
        'source_id': diagram.source_id,
        'persistence_tau': config.persistence_tau,
        'seed': diagram.seed,
    }
    fileio.writeQuadrants(args.output, points, meta)
    counts = {q: sum(1 for qp in points if qp.quadrant == q) for q in builtin.QUADRANTS}
    return {'outputs': [args.output], 'quadrants': counts}


def cmd_features(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    samples = []
    for path in args.inputs:
        diagram = dg.filter_persistence(fileio.readDiagram(path), config.persistence_tau)
        balls = texture_local.sample_grid(diagram.dims, config.grid_spacing,
                                          config.ball_r_xy, config.ball_rz_fraction)
        centres, matrix = texture_local.local_features(diagram, balls)
        samples.append((sampleId(path, diagram.source_id), centres, matrix))
    meta = {
        'persistence_tau': config.persistence_tau,
        'grid_spacing': config.grid_spacing,
        'ball_r_xy': config.ball_r_xy,
        'ball_rz_fraction': config.ball_rz_fraction,
    }
    fileio.writeFeatures(args.output, samples, meta)
    return {
        'outputs': [args.output],
        'rows': {sample_id: int(matrix.shape[0]) for sample_id, _, matrix in samples},
    }


def cmd_cluster(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    ids, centres, matrix = fileio.readFeatures(args.input)
    features = texture_local.normalize(matrix)
    k = config.n_clusters
    if config.clustering == 'kmeans':
        labels, _, _ = texture_local.kmeans(features, k, config.seed)
    elif config.clustering == 'gmm':
        labels = texture_local.cluster_gmm(features, k, config.seed)
    else:
        labels, _ = texture_local.cluster_clara(features, k, seed=config.seed)
    meta = {'clustering': config.clustering, 'n_clusters': k, 'seed': config.seed}
    outputs = [args.output]
    fileio.writeLabels(args.output, ids, centres, labels, meta)

    samples = list(dict.fromkeys(ids))
    compositions = [
        texture_local.composition(
            [int(label) for i, label in zip(ids, labels) if i == sample], k, sample)
        for sample in samples
    ]
    if args.compositions:
        fileio.writeCompositions(args.compositions, compositions, meta)
        outputs.append(args.compositions)
    if args.embedding:
        embedding, _, variance = texture_local.pca2(
            [c.percentages for c in compositions])
        fileio.writeEmbedding(args.embedding, samples, embedding,
                              dict(meta, explained_variance=[float(v) for v in variance]))
        outputs.append(args.embedding)
    return {
        'outputs': outputs,
        'compositions': {c.sample_id: list(c.percentages) for c in compositions},
    }


def cmd_kde(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    samples = [quadrantPoints(path, config) for path in args.inputs]
    bounds = texture_global.shared_bounds([points for _, points in samples],
                                          config.kde_sigma)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    meta = {'quadrant': config.quadrant, 'kde_sigma': config.kde_sigma}
    outputs = []
    for sample_id, points in samples:
        grid = densityOf(points, bounds, config)
        csvPath = str(outdir / f"{sample_id}.density.csv")
        pgmPath = str(outdir / f"{sample_id}.pgm")
        fileio.writeDensity(csvPath, grid, dict(meta, sample_id=sample_id))
        fileio.writePGM(pgmPath, grid)
        outputs += [csvPath, pgmPath]
    return {'outputs': outputs, 'bounds': list(bounds)}


def cmd_tree(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    labels = [sampleId(path) for path in args.inputs]
    grids = [fileio.readDensity(path) for path in args.inputs]
    dist = texture_global.distance_matrix(grids)
    tree = texture_global.upgma(dist, labels)
    fileio.writeText(args.output, texture_global.to_newick(tree) + '\n')
    outputs = [args.output]
    if args.matrix:
        fileio.writeMatrix(args.matrix, labels, dist, {'measure': 'l2'})
        outputs.append(args.matrix)
    summary: Summary = {'outputs': outputs, 'leaves': len(labels)}
    if config.cut_height is not None:
        summary['clusters'] = texture_global.cut(tree, config.cut_height)
    return summary


def cmd_fit(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    """Fits one phase model; with --select the summary carries the whole
    criterion curve and the fitting time of every swept size.
    """
    points = lang.WeightedPoints.concat(
        [quadrantPoints(path, config)[1] for path in args.inputs])
    if args.select:
        lo, hi = args.sizes
        if not 1 <= lo <= hi:
            raise builtin.ConfigError("expected 1 <= min <= max", 'sizes')
        selection = mixture.select_size(points, tuple(args.sizes), config.seed, args.criterion,
                                        config.covariance_floor, config.em_tol,
                                        config.em_max_iter)
        c = selection.best
        sweep = {
            'criterion': selection.criterion,
            'curve': {str(k): float(v) for k, v in selection.curve.items()},
            'seconds': {str(k): float(v) for k, v in selection.seconds.items()},
        }
    else:
        c = args.components or config.phase_sizes.get(args.phase, builtin.PHASE_SIZES[args.phase])
    if args.no_bootstrap:
        model = mixture.em_fit(points, c, config.seed, config.em_tol,
                               config.em_max_iter, config.covariance_floor)
    else:
        model = mixture.bootstrap_fit(points, c, config.bootstrap_b, config.seed,
                                      config.covariance_floor, config.em_tol,
                                      config.em_max_iter)
    model = model.withLabels(args.phase, config.quadrant)
    fileio.writeModel(args.output, model)
    assert model.fit is not None
    summary: Summary = {
        'outputs': [args.output],
        'phase': args.phase,
        'components': c,
        'points': len(points),
        'loglik': model.fit.loglik,
        'bic': model.fit.bic,
    }
    if args.select:
        summary['selection'] = sweep
    return summary


def cmd_classify(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    sample_id, points = quadrantPoints(args.input, config)
    models = readModels(args.models)
    predicted, distances = mixture.classify(
        points, models, args.components, config.seed, config.size_range,
        config.quadrant, config.covariance_floor)
    summary: Summary = {
        'sample': sample_id,
        'predicted': predicted,
        'hellinger': floats(distances),
        'outputs': [],
    }
    if args.output:
        fileio.writeJSON(args.output, {k: v for k, v in summary.items() if k != 'outputs'})
        summary['outputs'] = [args.output]
    return summary


def cmd_evaluate(args: argparse.Namespace, config: PipelineConfig) -> Summary:
    if args.phases and len(args.phases) != len(args.inputs):
        raise builtin.ConfigError(
            f"{len(args.phases)} phases for {len(args.inputs)} samples", 'phases')
    models = readModels(args.models)
    phases = args.phases or [None] * len(args.inputs)
    seeds = [system.childSeed(rng) for rng in system.rngStreams(config.seed, len(args.inputs))]
    rows = []
    for path, phase, seed in zip(args.inputs, phases, seeds):
        sample_id, points = quadrantPoints(path, config)
        rows.append(mixture.evaluate_sample(
            points, models, config.bootstrap_b, seed, sample_id, phase,
            args.components, config.size_range, config.quadrant, config.covariance_floor))
    meta = {'seed': config.seed, 'quadrant': config.quadrant,
            'bootstrap_b': config.bootstrap_b}
    fileio.writeEvaluation(args.output, rows, meta, 'hellinger')
    outputs = [args.output]
    if args.kl_output:
        fileio.writeEvaluation(args.kl_output, rows, meta, 'kl')
        outputs.append(args.kl_output)
    return {
        'outputs': outputs,
        'predicted': {row.sample_id: row.predicted for row in rows},
    }


# Synthetic staging study


def phantomDiagram(job: Tuple[str, str, int], config: PipelineConfig,
                   outdir: Path) -> lang.Diagram:
    phantom_class, sample_id, seed = job
    spec = phantom.PhantomSpec.forClass(phantom_class, seed, config.phantom_dims)
    field = sdt.signed_distance(phantom.make_vessel_network(spec))
    diagram = cubical.persistence(field, sample_id)
    fileio.writeDiagram(outdir / 'diagrams' / f"{sample_id}.csv", diagram)
    return dg.filter_persistence(diagram, config.persistence_tau)


def splitSamples(ids: Sequence[int],
                 rng: np.random.Generator) -> Tuple[List[int], List[int]]:
    """Seeded half split of sample indices; training gets the odd one."""
    order = rng.permutation(len(ids))
    cut = (len(ids) + 1) // 2
    return sorted(int(i) for i in order[:cut]), sorted(int(i) for i in order[cut:])


def cmd_reproduce(config: PipelineConfig) -> Summary:
    """Runs the synthetic staging study and writes its report."""
    outdir = Path(config.output_dir)
    (outdir / 'diagrams').mkdir(parents=True, exist_ok=True)
    (outdir / 'models').mkdir(parents=True, exist_ok=True)
    phantomRng, splitRng, fitRng, evalRng = system.rngStreams(config.seed, 4)

    jobs = [
        (phantom_class, f"{phantom_class}-{i:02d}", system.childSeed(phantomRng))
        for phantom_class in builtin.PHANTOM_CLASSES
        for i in range(config.phantoms_per_class)
    ]
    diagrams = system.parallelMap(lambda job: phantomDiagram(job, config, outdir), jobs)
    ids = [sample_id for _, sample_id, _ in jobs]
    points = [dg.select_quadrant(d, config.quadrant) for d in diagrams]
    logger.info("reproduce: %d phantoms, %s point counts %s",
                len(jobs), config.quadrant, [len(p) for p in points])

    train: Dict[str, List[int]] = {phase: [] for phase in builtin.PHASES}
    test: List[int] = []
    for phantom_class in builtin.PHANTOM_CLASSES:
        members = [i for i, job in enumerate(jobs) if job[0] == phantom_class]
        trainIdx, testIdx = splitSamples(members, splitRng)
        train[builtin.CLASS_PHASE[phantom_class]] += [members[i] for i in trainIdx]
        test += [members[i] for i in testIdx]

    outputs: List[str] = [str(outdir / 'diagrams' / f"{i}.csv") for i in ids]
    models: Dict[str, lang.MixtureModel] = {}
    for phase in builtin.PHASES:
        pooled = lang.WeightedPoints.concat([points[i] for i in train[phase]])
        c = config.phase_sizes.get(phase, builtin.PHASE_SIZES[phase])
        model = mixture.bootstrap_fit(pooled, c, config.bootstrap_b,
                                      system.childSeed(fitRng), config.covariance_floor,
                                      config.em_tol, config.em_max_iter)
        models[phase] = model.withLabels(phase, config.quadrant)
        path = outdir / 'models' / f"{phase}.json"
        fileio.writeModel(path, models[phase])
        outputs.append(str(path))

    skipped = [ids[i] for i in test if len(points[i]) == 0]
    for sample_id in skipped:
        logger.warning("reproduce: %s has no %s points, not classified",
                       sample_id, config.quadrant)
    test = [i for i in test if len(points[i])]
    seeds = [system.childSeed(evalRng) for _ in test]
    rows = [
        mixture.evaluate_sample(
            points[i], models, config.bootstrap_b, seed, ids[i],
            builtin.CLASS_PHASE[jobs[i][0]], None, config.size_range,
            config.quadrant, config.covariance_floor)
        for i, seed in zip(test, seeds)
    ]
    meta = {'seed': config.seed, 'quadrant': config.quadrant,
            'bootstrap_b': config.bootstrap_b}
    for kind in ('hellinger', 'kl'):
        path = outdir / f"evaluation_{kind}.csv"
        fileio.writeEvaluation(path, rows, meta, kind)
        outputs.append(str(path))

    # Global texture of every phantom on one shared grid
    bounds = texture_global.shared_bounds(points, config.kde_sigma)
    grids = [densityOf(p, bounds, config) for p in points]
    dist = texture_global.distance_matrix(grids)
    tree = texture_global.upgma(dist, ids)
    fileio.writeMatrix(outdir / 'distances.csv', ids, dist,
                       dict(meta, kde_sigma=config.kde_sigma, bounds=list(bounds)))
    fileio.writeText(outdir / 'tree.nwk', texture_global.to_newick(tree) + '\n')
    outputs += [str(outdir / 'distances.csv'), str(outdir / 'tree.nwk')]

    correct = sum(1 for row in rows if row.predicted == row.phase)
    confusion = {
        phase: {p: sum(1 for row in rows if row.phase == phase and row.predicted == p)
                for p in builtin.PHASES}
        for phase in builtin.PHASES
    }
    report: Summary = {
        'seed': config.seed,
        'quadrant': config.quadrant,
        'bootstrap_b': config.bootstrap_b,
        'phantoms_per_class': config.phantoms_per_class,
        'n_train': sum(len(v) for v in train.values()),
        'n_test': len(rows),
        'correct': correct,
        'skipped': skipped,
        'accuracy': correct / len(rows) if rows else 0.0,
        'confusion': confusion,
        'predictions': [
            {'sample': row.sample_id, 'phase': row.phase, 'predicted': row.predicted}
            for row in rows
        ],
    }
    reportPath = outdir / 'report.json'
    fileio.writeJSON(reportPath, report)
    outputs.append(str(reportPath))
    return dict(report, outputs=outputs)


COMMANDS: Dict[str, function[[argparse.Namespace, PipelineConfig], Summary]] = {
    'phantom': cmd_phantom,
    'sdt': cmd_sdt,
    'ph': cmd_ph,
    'quadrant': cmd_quadrant,
    'features': cmd_features,
    'cluster': cmd_cluster,
    'kde': cmd_kde,
    'tree': cmd_tree,
    'fit': cmd_fit,
    'classify': cmd_classify,
    'evaluate': cmd_evaluate,
    'reproduce': lambda args, config: cmd_reproduce(config),
}


# Parser


def buildParser(version: str = '') -> ArgumentParser:
    common = ArgumentParser(add_help=False)
    common.add_argument('--config', help="flat TOML configuration file")
    common.add_argument('--seed', type=int, help="master seed")

    tau = ArgumentParser(add_help=False)
    tau.add_argument('--tau', dest='persistence_tau', type=float,
                     help="drop points with persistence below this")

    quadrant = ArgumentParser(add_help=False)
    quadrant.add_argument('--quadrant', choices=builtin.CLASSIFIABLE,
                          help="diagram quadrant to analyse")

    models = ArgumentParser(add_help=False)
    models.add_argument('--models', nargs='+', required=True,
                        help="phase model JSON files")
    models.add_argument('--components', type=int,
                        help="fixed sample GMM size (default: BIC over --size-range)")
    models.add_argument('--size-range', dest='size_range', type=int, nargs=2,
                        metavar=('MIN', 'MAX'))
    models.add_argument('--covariance-floor', dest='covariance_floor', type=float)

    parser = ArgumentParser(
        prog='sdph',
        description="Signed distance persistent homology of 3D voxel volumes.",
    )
    parser.add_argument('--version', action='version', version=f"sdph {version}")
    sub = parser.add_subparsers(dest='command', required=True, metavar='command')

    p = sub.add_parser('phantom', parents=[common], help="write a synthetic volume")
    p.add_argument('kind', choices=('ball', 'torus', 'network'))
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--dims', dest='phantom_dims', type=int, nargs=3, metavar=('NX', 'NY', 'NZ'))
    p.add_argument('--center', type=float, nargs=3, metavar=('X', 'Y', 'Z'))
    p.add_argument('--radius', type=float, default=5.0, help="ball radius")
    p.add_argument('--ring-radius', type=float, default=10.0)
    p.add_argument('--tube-radius', type=float, default=3.0)
    p.add_argument('--axis', choices=('x', 'y', 'z'), default='z')
    p.add_argument('--class', dest='phantom_class', choices=builtin.PHANTOM_CLASSES)

    p = sub.add_parser('sdt', parents=[common], help="signed distance transform")
    p.add_argument('input')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--bruteforce', action='store_true', help="use the exhaustive oracle")

    p = sub.add_parser('ph', parents=[common], help="cubical persistence diagram")
    p.add_argument('input')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--source-id', default='')
    p.add_argument('--chunks', dest='chunk_grid', type=int, nargs=3,
                   metavar=('CX', 'CY', 'CZ'))
    p.add_argument('--bruteforce', action='store_true', help="use the reduction oracle")

    p = sub.add_parser('quadrant', parents=[common, tau], help="quadrant decomposition")
    p.add_argument('input')
    p.add_argument('-o', '--output', required=True)

    p = sub.add_parser('features', parents=[common, tau], help="local texture features")
    p.add_argument('inputs', nargs='+')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--grid-spacing', dest='grid_spacing', type=int)
    p.add_argument('--r-xy', dest='ball_r_xy', type=float)
    p.add_argument('--rz-fraction', dest='ball_rz_fraction', type=float)

    p = sub.add_parser('cluster', parents=[common], help="cluster local features")
    p.add_argument('input')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('-k', '--clusters', dest='n_clusters', type=int)
    p.add_argument('--method', dest='clustering', choices=CLUSTERINGS)
    p.add_argument('--compositions', help="per-sample composition CSV")
    p.add_argument('--embedding', help="2D PCA embedding CSV of the compositions")

    p = sub.add_parser('kde', parents=[common, tau, quadrant], help="global densities")
    p.add_argument('inputs', nargs='+')
    p.add_argument('-o', '--output', required=True, help="output directory")
    p.add_argument('--sigma', dest='kde_sigma', type=float)
    p.add_argument('--resolution', dest='kde_resolution', type=int, nargs=2,
                   metavar=('NB', 'ND'))

    p = sub.add_parser('tree', parents=[common], help="UPGMA tree of densities")
    p.add_argument('inputs', nargs='+')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--matrix', help="distance matrix CSV")
    p.add_argument('--cut-height', dest='cut_height', type=float)

    p = sub.add_parser('fit', parents=[common, tau, quadrant], help="fit a phase model")
    p.add_argument('inputs', nargs='+')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--phase', required=True, choices=builtin.PHASES)
    p.add_argument('--components', type=int)
    p.add_argument('--select', action='store_true', help="choose the size by sweeping --sizes")
    p.add_argument('--sizes', type=int, nargs=2, metavar=('MIN', 'MAX'),
                   default=list(builtin.SIZE_RANGE), help="component counts swept by --select")
    p.add_argument('--criterion', choices=('bic', 'aic'), default='bic')
    p.add_argument('--bootstrap', dest='bootstrap_b', type=int)
    p.add_argument('--no-bootstrap', action='store_true')
    p.add_argument('--covariance-floor', dest='covariance_floor', type=float)

    p = sub.add_parser('classify', parents=[common, tau, quadrant, models],
                       help="predict the phase of one sample")
    p.add_argument('input')
    p.add_argument('-o', '--output')

    p = sub.add_parser('evaluate', parents=[common, tau, quadrant, models],
                       help="bootstrap distance tables")
    p.add_argument('inputs', nargs='+')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--kl-output')
    p.add_argument('--phases', nargs='+', choices=builtin.PHASES)
    p.add_argument('--bootstrap', dest='bootstrap_b', type=int)

    p = sub.add_parser('reproduce', parents=[common, quadrant],
                       help="synthetic staging study")
    p.add_argument('-o', '--output', dest='output_dir')
    p.add_argument('--per-class', dest='phantoms_per_class', type=int)
    p.add_argument('--dims', dest='phantom_dims', type=int, nargs=3, metavar=('NX', 'NY', 'NZ'))
    p.add_argument('--bootstrap', dest='bootstrap_b', type=int)
    return parser


def execute(argv: Optional[Sequence[str]] = None, version: str = '') -> Summary:
    """Runs one command and returns its summary."""
    args = buildParser(version).parse_args(argv)
    config = configFrom(args)
    logger.info("%s: seed %d", args.command, config.seed)
    summary = COMMANDS[args.command](args, config)
    summary.setdefault('outputs', [])
    return dict(summary, command=args.command, seed=config.seed)
