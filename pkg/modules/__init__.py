# Modules package for the Koszul division toolkit
