# Hand-built (6,5,12,5,4,2,9) HpPDA with a tabulated choice of zeta per active set.
hppda 6 5 12 5 4 2 9
construction tabulated
P
6 12
* - - - * -
* - - - - *
* - * - - -
* * - - - -
- * - * - -
- * - - - *
- * * - - -
- - * - * -
- - * * - -
- - - * * -
- - - - * *
- - - * - *
B
5 5
* 1 4 6 *
* * 2 5 7
1 * * 3 8
4 2 * * 9
6 5 3 * *
zeta 1,2,3,4,5 1,4,7,9,10
zeta 1,2,3,4,6 2,4,7,9,12
zeta 1,2,3,5,6 2,4,7,8,11
zeta 1,2,4,5,6 2,4,5,10,11
zeta 1,3,4,5,6 2,3,9,10,11
zeta 2,3,4,5,6 6,7,9,10,11
removal 1 3 4 5 7 8
