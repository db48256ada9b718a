import pytest
import numpy as np
from permcodes.codebook import (StructureKind, FactorGraph, PartialGrid, CodewordCount, InvalidParameterError,
                                ConstructionError, build_structure, build_random_regular, validate, count_codewords,
                                enumerate_codewords, sample_codeword)
from permcodes.codebook.constraint_graph import mask_symbols, full_mask


class TestBuildStructure():
    def test_latin(self):
        graph = build_structure(StructureKind.LATIN, 3)
        assert graph.num_vars == 9
        assert graph.num_constraints == 6
        assert all(len(c) == 3 for c in graph.constraints)
        assert graph.structure_tag == StructureKind.LATIN

    def test_sudoku(self):
        graph = build_structure("sudoku", 4)
        assert graph.num_vars == 16
        assert graph.num_constraints == 12
        assert graph.constraints[8] == (0, 1, 4, 5)
        assert list(graph.variable_degrees) == [3] * 16

    def test_sudoku_needs_square_q(self):
        with pytest.raises(InvalidParameterError):
            build_structure(StructureKind.SUDOKU, 5)

    def test_semi_pandiagonal(self):
        graph = build_structure(StructureKind.SEMI_PANDIAGONAL, 5)
        assert graph.num_vars == 25
        assert graph.num_constraints == 15
        assert graph.constraints[10] == (0, 6, 12, 18, 24)

    def test_pandiagonal(self):
        graph = build_structure(StructureKind.PANDIAGONAL, 5)
        assert graph.num_constraints == 20
        # left diagonal j=0 wraps from the last column
        assert graph.constraints[15] == (4, 8, 12, 16, 20)

    def test_rejects_random_regular(self):
        with pytest.raises(InvalidParameterError):
            build_structure(StructureKind.RANDOM_REGULAR, 4)

    def test_describe(self):
        text = build_structure(StructureKind.SUDOKU, 4).describe()
        assert text == "sudoku q=4 N=16 constraints=12 d_v=3 d_c=4"

    def test_memberships_and_neighbors(self):
        graph = build_structure(StructureKind.LATIN, 3)
        assert graph.memberships[4] == ((1, 1), (4, 1))
        assert graph.neighbors[0] == (1, 2, 3, 6)


class TestFactorGraph():
    def test_rejects_wrong_degree(self):
        with pytest.raises(InvalidParameterError):
            FactorGraph(3, 4, ((0, 1),))

    def test_rejects_repeated_variable(self):
        with pytest.raises(InvalidParameterError):
            FactorGraph(3, 4, ((0, 1, 1),))

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidParameterError):
            FactorGraph(3, 3, ((0, 1, 3),))


class TestRandomRegular():
    def test_small(self):
        graph = build_random_regular(3, 3, 9, seed=5)
        assert graph.num_constraints == 9
        assert list(graph.variable_degrees) == [3] * 9
        assert all(len(set(c)) == 3 for c in graph.constraints)

    def test_sudoku_sized(self):
        graph = build_random_regular(3, 9, 81, seed=11)
        assert graph.num_vars == 81
        assert graph.num_constraints == 27
        assert set(graph.variable_degrees) == {3}

    def test_deterministic(self):
        assert build_random_regular(3, 4, 16, 2).constraints == build_random_regular(3, 4, 16, 2).constraints

    def test_rejects_indivisible(self):
        with pytest.raises(InvalidParameterError):
            build_random_regular(3, 4, 9, 0)

    def test_too_few_variables(self):
        with pytest.raises(InvalidParameterError):
            build_random_regular(3, 3, 2, 0)


class TestValidate():
    def test_sudoku_valid(self, sudoku4_codeword):
        assert validate(build_structure(StructureKind.SUDOKU, 4), sudoku4_codeword)

    def test_cyclic_latin_square_is_not_sudoku(self):
        word = [1, 2, 3, 4, 2, 3, 4, 1, 3, 4, 1, 2, 4, 1, 2, 3]
        assert validate(build_structure(StructureKind.LATIN, 4), word)
        assert not validate(build_structure(StructureKind.SUDOKU, 4), word)

    def test_repeated_value(self):
        assert not validate(build_structure(StructureKind.LATIN, 3), [2, 2, 1, 1, 3, 2, 3, 1, 3])

    def test_length_mismatch(self):
        with pytest.raises(InvalidParameterError):
            validate(build_structure(StructureKind.LATIN, 3), [1, 2, 3])


class TestCounting():
    @pytest.mark.parametrize("kind, q, expected", [
        (StructureKind.SEMI_PANDIAGONAL, 3, 6),
        (StructureKind.SEMI_PANDIAGONAL, 4, 0),
        (StructureKind.SEMI_PANDIAGONAL, 5, 360),
        (StructureKind.SUDOKU, 4, 288),
        (StructureKind.LATIN, 3, 12),
        (StructureKind.LATIN, 4, 576),
    ])
    def test_count(self, kind, q, expected):
        result = count_codewords(build_structure(kind, q))
        assert (result.count, result.capped) == (expected, False)
        assert int(result) == expected

    @pytest.mark.long_run
    def test_count_semi_pandiagonal_7(self):
        assert count_codewords(build_structure(StructureKind.SEMI_PANDIAGONAL, 7)).count == 3_200_400

    def test_limit(self):
        result = count_codewords(build_structure(StructureKind.LATIN, 3), limit=6)
        assert result.capped
        assert result.count == 6

    def test_limit_reached_exactly(self):
        result = count_codewords(build_structure(StructureKind.LATIN, 3), limit=12)
        assert (result.count, result.capped) == (12, False)

    def test_unconstrained_graph(self):
        assert count_codewords(FactorGraph(3, 2, ())) == CodewordCount(9, False)

    def test_enumerate_matches_count(self):
        graph = build_structure(StructureKind.LATIN, 3)
        words = [tuple(w) for w in enumerate_codewords(graph)]
        assert len(words) == 12
        assert len(set(words)) == 12
        assert words == sorted(words)
        assert all(validate(graph, w) for w in words)

    @pytest.mark.parametrize("kind, q", [
        (StructureKind.SUDOKU, 4),
        (StructureKind.SEMI_PANDIAGONAL, 5),
        (StructureKind.PANDIAGONAL, 5),
    ])
    def test_enumerated_codewords_validate(self, kind, q):
        graph = build_structure(kind, q)
        assert all(validate(graph, w) for w in enumerate_codewords(graph))


class TestSampling():
    def test_valid_and_deterministic(self):
        graph = build_structure(StructureKind.SUDOKU, 9)
        word = sample_codeword(graph, 3)
        assert validate(graph, word)
        assert np.array_equal(word, sample_codeword(graph, 3))

    def test_member_of_enumeration(self):
        graph = build_structure(StructureKind.SEMI_PANDIAGONAL, 5)
        codewords = {tuple(w) for w in enumerate_codewords(graph)}
        assert len(codewords) == 360
        for seed in range(5):
            assert tuple(sample_codeword(graph, seed)) in codewords

    def test_no_codeword(self):
        with pytest.raises(ConstructionError):
            sample_codeword(build_structure(StructureKind.PANDIAGONAL, 4), 0)


class TestPartialGrid():
    def test_masks(self):
        assert full_mask(4) == 0b1111
        assert mask_symbols(0b1010) == [2, 4]

    def test_from_symbols(self):
        grid = PartialGrid.from_symbols(3, [1, 0, 3])
        assert grid.cells == (0b001, 0b111, 0b100)
        assert grid.cardinalities() == [1, 3, 1]
        assert not grid.is_complete()
        assert list(grid.to_symbols()) == [1, 0, 3]
        assert grid.contains([1, 2, 3])
        assert not grid.contains([2, 2, 3])

    def test_to_codeword(self):
        grid = PartialGrid.from_codeword(3, [3, 1, 2])
        assert list(grid.to_codeword()) == [3, 1, 2]
        with pytest.raises(InvalidParameterError):
            PartialGrid.erased(3, 3).to_codeword()

    def test_contradictory(self):
        assert PartialGrid(3, (0, 1, 2)).is_contradictory()
